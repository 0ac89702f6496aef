// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include "jedi/harmonic.hpp"
#include "jedi/kernels/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace jedi;

namespace {

FeatureMatrix features(Eigen::Index n, Eigen::Index m) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  FeatureMatrix X(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) X(i, j) = g(rng);
  return X;
}

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("e" + std::to_string(100000 + i));
  return out;
}

template <bool Parallel>
void residual_scores(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const FeatureMatrix X = features(n, 10);
  const std::vector<double> coef(static_cast<std::size_t>(n), 0.3);
  const Vector target = Vector::Constant(10, 0.5);
  std::vector<double> out(coef.size());
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::omp::residual_scores(X, coef, target, out);
    else
      kernels::serial::residual_scores(X, coef, target, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

template <bool Parallel>
void argmin(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::vector<double> scores(n);
  for (auto& s : scores) s = static_cast<double>(rng() % 1000);
  const auto names = ids(n);
  for (auto _ : state) {
    auto best = Parallel ? kernels::omp::argmin(scores, names) : kernels::serial::argmin(scores, names);
    benchmark::DoNotOptimize(best);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <bool Parallel>
void affinity(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const FeatureMatrix X = features(n, 10);
  const Vector inv = Vector::Constant(10, 0.05);
  for (auto _ : state) {
    Matrix A = Parallel ? kernels::omp::affinity(X, inv) : kernels::serial::affinity(X, inv);
    benchmark::DoNotOptimize(A.data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}

template <bool Parallel>
void knn_affinity(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const FeatureMatrix X = features(n, 10);
  const Vector inv = Vector::Constant(10, 0.05);
  for (auto _ : state) {
    auto A = Parallel ? kernels::omp::knn_affinity(X, inv, 20) : kernels::serial::knn_affinity(X, inv, 20);
    benchmark::DoNotOptimize(A.nonZeros());
  }
}

// End-to-end harmonic estimate for a pool with 20 labeled examples.
void harmonic_estimate(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const FeatureMatrix X = features(n, 10);
  std::vector<Example> ex;
  for (Eigen::Index i = 0; i < n; ++i)
    ex.push_back({"e" + std::to_string(100000 + i), X.row(i).transpose(), X(i, 0) > 0 ? Label::Positive : Label::Negative, ""});
  const TeachingPool pool(std::move(ex));
  const HarmonicEstimator estimator(pool, default_bandwidths(pool));
  std::vector<LabeledEvent> labeled;
  for (std::size_t i = 0; i < 20; ++i) labeled.push_back({pool[i].id, i, pool[i].x, pool[i].y});
  for (auto _ : state) benchmark::DoNotOptimize(estimator.estimate(labeled).p.data());
}

}  // namespace

BENCHMARK(residual_scores<false>)->Name("residual_scores/serial")->Arg(1000)->Arg(100000);
BENCHMARK(residual_scores<true>)->Name("residual_scores/omp")->Arg(1000)->Arg(100000);
BENCHMARK(argmin<false>)->Name("argmin/serial")->Arg(1000)->Arg(100000);
BENCHMARK(argmin<true>)->Name("argmin/omp")->Arg(1000)->Arg(100000);
BENCHMARK(affinity<false>)->Name("affinity/serial")->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(affinity<true>)->Name("affinity/omp")->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(knn_affinity<false>)->Name("knn_affinity/serial")->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK(knn_affinity<true>)->Name("knn_affinity/omp")->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK(harmonic_estimate)->Arg(500)->Arg(1800)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
