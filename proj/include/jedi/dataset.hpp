#pragma once

#include "jedi/rng.hpp"
#include "jedi/types.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace jedi {

// Two-class 2D Gaussian mixture: each class draws component 1 with
// probability 2/3 and component 2 with probability 1/3.
struct Mixture2DParams {
  Eigen::Vector2d mu_pos1{0.0, 8.0};
  Eigen::Vector2d mu_pos2{8.0, 0.0};
  Eigen::Vector2d mu_neg1{-8.0, 0.0};
  Eigen::Vector2d mu_neg2{0.0, -8.0};
  Eigen::Matrix2d sigma1 = (Eigen::Matrix2d() << 12.0, 6.0, 6.0, 12.0).finished();
  Eigen::Matrix2d sigma2 = (Eigen::Matrix2d() << 10.0, 5.0, 5.0, 10.0).finished();
  double major_weight = 2.0 / 3.0;
  std::size_t per_class = 150;
  std::size_t eval_per_class = 150;
};

// Two Gaussian classes in m dimensions with means -mu*1 and +mu*1 sharing a
// diagonal covariance whose entries are drawn uniformly from [var_lo, var_hi].
struct GaussianParams {
  std::size_t dimension = 10;
  double mean_offset = 0.6;
  double var_lo = 1.0;
  double var_hi = 10.0;
  std::size_t per_class = 1000;
  double teach_fraction = 0.2;
};

struct Dataset {
  TeachingPool teach;
  TeachingPool eval;
  Vector covariance_diagonal;  // gaussian10d only
};

Dataset gen_mixture2d(const Mixture2DParams& params, std::uint64_t seed);
Dataset gen_gaussian10d(const GaussianParams& params, std::uint64_t seed);

// Header `id,label,f1..fm`; an optional column named `payload` carries a
// display asset reference. Labels in {-1, 1} or {0, 1}.
TeachingPool load_csv(const std::filesystem::path& path);
TeachingPool parse_csv(std::istream& in, const std::string& source = "<stream>");
void write_csv(const std::filesystem::path& path, const TeachingPool& pool);

// Stratified by class; returns (teach, eval).
std::pair<TeachingPool, TeachingPool> split(const TeachingPool& pool, double fraction, std::uint64_t seed);

// Zero-padded ids so lexicographic order matches generation order.
std::string make_id(std::string_view prefix, std::size_t index, std::size_t total);

}  // namespace jedi
