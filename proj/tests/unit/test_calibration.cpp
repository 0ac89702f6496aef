#include <doctest.h>

#include "jedi/calibration.hpp"
#include "jedi/learner.hpp"
#include "jedi/types.hpp"

#include <numeric>
#include <random>

using namespace jedi;

namespace {

SortingRound exact_round(int k) {
  SortingRound r;
  r.set_size = k;
  r.shown_order.resize(static_cast<std::size_t>(k));
  std::iota(r.shown_order.begin(), r.shown_order.end(), 10);
  r.recovered_order = r.shown_order;
  r.exposure_seconds = exposure_seconds(k);
  return r;
}

SortingRound wrong_round(int k) {
  SortingRound r = exact_round(k);
  std::swap(r.recovered_order[0], r.recovered_order[1]);
  return r;
}

}  // namespace

TEST_CASE("trial score is the largest exactly recovered set") {
  CHECK(score_trial({{exact_round(2), exact_round(3), exact_round(4), exact_round(5)}}) == 5);
  CHECK(score_trial({{exact_round(2), exact_round(3), wrong_round(4)}}) == 3);
  CHECK(score_trial({{wrong_round(2), wrong_round(3)}}) == 1);
  CHECK(score_trial({{exact_round(9)}}) == 9);
}

TEST_CASE("malformed trials are rejected") {
  CHECK_THROWS_AS(score_trial({}), ValidationError);
  CHECK_THROWS_AS(score_trial({{exact_round(3), exact_round(3)}}), ValidationError);
  CHECK_THROWS_AS(score_trial({{exact_round(4), exact_round(3)}}), ValidationError);

  SortingRound dup = exact_round(3);
  dup.shown_order[1] = dup.shown_order[0];
  CHECK_THROWS_AS(score_trial({{dup}}), ValidationError);

  SortingRound foreign = exact_round(3);
  foreign.recovered_order[2] = 99;
  CHECK_THROWS_AS(score_trial({{foreign}}), ValidationError);

  SortingRound short_recovery = exact_round(4);
  short_recovery.recovered_order.pop_back();
  CHECK_THROWS_AS(score_trial({{short_recovery}}), ValidationError);

  SortingRound big = exact_round(9);
  big.set_size = 10;
  CHECK_THROWS_AS(score_trial({{big}}), ValidationError);
}

TEST_CASE("any single transposition invalidates a round") {
  for (int k = 2; k <= 9; ++k) {
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        SortingRound r = exact_round(k);
        std::swap(r.recovered_order[static_cast<std::size_t>(i)], r.recovered_order[static_cast<std::size_t>(j)]);
        CHECK(score_trial({{r}}) == 1);
      }
    }
  }
}

TEST_CASE("beta estimate drops the smallest score") {
  const MemoryProfile p = estimate_beta({4, 6, 8});
  CHECK(p.n_bar == 7.0);
  CHECK(p.beta == 6.0 / 7.0);
  CHECK(p.budget == 40);

  const MemoryProfile q = estimate_beta({2, 2, 2});
  CHECK(q.n_bar == 2.0);
  CHECK(q.beta == 0.5);
  CHECK(q.budget == 20);

  const MemoryProfile r = estimate_beta({9, 9, 2});
  CHECK(r.n_bar == 9.0);
  CHECK(r.beta == 8.0 / 9.0);

  const MemoryProfile s = estimate_beta({2, 2, 3});
  CHECK(s.n_bar == 2.5);
  CHECK(s.budget == 20);
  CHECK(s.trial_scores == std::array<int, 3>{2, 2, 3});
}

TEST_CASE("beta estimate input checks") {
  CHECK_THROWS_AS(estimate_beta({4, 6}), ValidationError);
  CHECK_THROWS_AS(estimate_beta({4, 6, 8, 9}), ValidationError);
  CHECK_THROWS_AS(estimate_beta({0, 6, 8}), ValidationError);
  CHECK_THROWS_AS(estimate_beta({4, 6, 10}), ValidationError);
  // Floor scores: n_bar = 1 gives beta = 0, budget taken from the lowest band.
  const MemoryProfile floor = estimate_beta({1, 1, 1});
  CHECK(floor.beta == 0.0);
  CHECK(floor.budget == 20);
}

TEST_CASE("budget bands") {
  CHECK(teaching_budget(2.0) == 20);
  CHECK(teaching_budget(4.5) == 20);
  CHECK(teaching_budget(4.6) == 30);
  CHECK(teaching_budget(6.5) == 30);
  CHECK(teaching_budget(6.6) == 40);
  CHECK(teaching_budget(7.0) == 40);
  CHECK(teaching_budget(9.0) == 40);
  CHECK_THROWS_AS(teaching_budget(1.9), ValidationError);
  CHECK_THROWS_AS(teaching_budget(9.1), ValidationError);
}

TEST_CASE("beta rises with n_bar and inverts the memory window") {
  double previous = -1.0;
  for (int a = 2; a <= 9; ++a) {
    for (int b = a; b <= 9; ++b) {
      const MemoryProfile p = estimate_beta({1, a, b});
      CHECK(p.beta >= 0.5);
      CHECK(p.beta <= 8.0 / 9.0);
      CHECK(std::abs(memory_window(p.beta) - p.n_bar) <= 1e-12 * p.n_bar);
    }
  }
  for (int twice = 4; twice <= 18; ++twice) {
    const MemoryProfile p = estimate_beta({1, twice / 2, twice - twice / 2});
    CHECK(p.beta > previous);
    previous = p.beta;
  }
}

TEST_CASE("exposure grows linearly from 3 to 10 seconds") {
  CHECK(exposure_seconds(2) == 3.0);
  CHECK(exposure_seconds(9) == 10.0);
  CHECK(exposure_seconds(5) == 6.0);
  CHECK_THROWS_AS(exposure_seconds(1), ValidationError);
}
