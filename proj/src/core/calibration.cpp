#include "jedi/calibration.hpp"

#include "jedi/types.hpp"

#include <algorithm>
#include <string>

namespace jedi {

double exposure_seconds(int set_size) {
  if (set_size < kMinSetSize || set_size > kMaxSetSize) throw ValidationError("set size must lie in [2, 9]");
  return 3.0 + static_cast<double>(set_size - kMinSetSize);
}

namespace {

void validate_round(const SortingRound& r, std::size_t index) {
  const std::string where = "round " + std::to_string(index + 1);
  if (r.set_size < kMinSetSize || r.set_size > kMaxSetSize) throw ValidationError(where + ": set size must lie in [2, 9]");
  const auto k = static_cast<std::size_t>(r.set_size);
  if (r.shown_order.size() != k || r.recovered_order.size() != k) {
    throw ValidationError(where + ": orders must list exactly set_size items");
  }
  std::vector<int> shown = r.shown_order;
  std::vector<int> recovered = r.recovered_order;
  std::sort(shown.begin(), shown.end());
  std::sort(recovered.begin(), recovered.end());
  if (std::adjacent_find(shown.begin(), shown.end()) != shown.end()) {
    throw ValidationError(where + ": shown order repeats an item");
  }
  if (shown != recovered) throw ValidationError(where + ": recovered order is not a permutation of the shown items");
}

}  // namespace

int score_trial(const SortingTrial& trial) {
  if (trial.rounds.empty()) throw ValidationError("trial has no rounds");
  int best = 1;
  int previous = 0;
  for (std::size_t i = 0; i < trial.rounds.size(); ++i) {
    const SortingRound& r = trial.rounds[i];
    validate_round(r, i);
    if (r.set_size <= previous) throw ValidationError("set sizes must increase within a trial");
    previous = r.set_size;
    if (r.recovered_order == r.shown_order) best = std::max(best, r.set_size);
  }
  return best;
}

MemoryProfile estimate_beta(const std::vector<int>& scores) {
  if (scores.size() != 3) throw ValidationError("memory estimation needs exactly 3 trial scores");
  for (int s : scores) {
    if (s < 1 || s > kMaxSetSize) throw ValidationError("trial scores must lie in [1, 9]");
  }
  const auto drop = static_cast<std::size_t>(std::min_element(scores.begin(), scores.end()) - scores.begin());
  int sum = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (i != drop) sum += scores[i];
  }
  MemoryProfile p;
  std::copy(scores.begin(), scores.end(), p.trial_scores.begin());
  p.n_bar = static_cast<double>(sum) / 2.0;
  // Same value as 1 - 1 / n_bar, but correctly rounded: 6/7 comes out exact.
  p.beta = (p.n_bar - 1.0) / p.n_bar;
  p.budget = teaching_budget(std::clamp(p.n_bar, 2.0, 9.0));
  return p;
}

int teaching_budget(double n_bar) {
  if (!(n_bar >= 2.0 && n_bar <= 9.0)) throw ValidationError("n_bar must lie in [2, 9]");
  if (n_bar <= 4.5) return 20;
  if (n_bar <= 6.5) return 30;
  return 40;
}

}  // namespace jedi
