#pragma once

#include <array>
#include <vector>

namespace jedi {

// One round of the image-sorting game: k items shown in `shown_order` for
// `exposure_seconds`, then the learner's reconstruction.
struct SortingRound {
  int set_size = 2;
  std::vector<int> shown_order;
  std::vector<int> recovered_order;
  double exposure_seconds = 3.0;
};

struct SortingTrial {
  std::vector<SortingRound> rounds;
};

struct MemoryProfile {
  std::array<int, 3> trial_scores{};
  double n_bar = 1.0;
  double beta = 0.0;
  int budget = 20;
};

inline constexpr int kMinSetSize = 2;
inline constexpr int kMaxSetSize = 9;

// Exposure time of a round of size k: 3s at k = 2 rising linearly to 10s at k = 9.
double exposure_seconds(int set_size);

// Largest set size recovered exactly; 1 when no round was recovered.
// Throws ValidationError on malformed rounds.
int score_trial(const SortingTrial& trial);

// Drops the smallest score (earliest on ties), averages the other two, and
// sets beta = 1 - 1 / n_bar. The budget uses n_bar clamped to [2, 9].
MemoryProfile estimate_beta(const std::vector<int>& scores);

// 20, 30 or 40 examples for n_bar in [2, 4.5], (4.5, 6.5], (6.5, 9].
int teaching_budget(double n_bar);

}  // namespace jedi
