#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace jedi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// One example per row.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Caller broke a precondition (dimension mismatch, out-of-range parameter).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data or configuration failed validation (CSV, config files, requests).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Label : int { Negative = -1, Positive = 1 };

constexpr double value(Label y) { return static_cast<double>(static_cast<int>(y)); }
constexpr Label opposite(Label y) { return y == Label::Positive ? Label::Negative : Label::Positive; }

// Accepts -1/+1, and 0 as an alias for -1.
Label label_from_int(long v);

struct Concept {
  Vector w;

  Concept() = default;
  explicit Concept(Vector weights) : w(std::move(weights)) {}
  static Concept zeros(Eigen::Index m) { return Concept(Vector::Zero(m)); }
  Eigen::Index dim() const { return w.size(); }
};

double distance_sq(const Concept& a, const Concept& b);

struct Example {
  std::string id;
  Vector x;
  Label y = Label::Positive;
  std::string payload;
};

// The teaching set. Immutable after construction; the row-major feature matrix
// mirrors `examples` for the kernels.
class TeachingPool {
 public:
  static constexpr double kUnitSphereTolerance = 1e-9;

  TeachingPool() = default;
  explicit TeachingPool(std::vector<Example> examples);

  const std::vector<Example>& examples() const { return examples_; }
  const Example& operator[](std::size_t i) const { return examples_[i]; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  Eigen::Index dimension() const { return dimension_; }
  bool unit_sphere() const { return unit_sphere_; }
  double max_norm_deviation() const { return max_norm_deviation_; }

  const FeatureMatrix& features() const { return features_; }
  const std::vector<std::string>& ids() const { return ids_; }
  double label_value(std::size_t i) const { return value(examples_[i].y); }
  std::size_t count(Label y) const;
  std::optional<std::size_t> index_of(const std::string& id) const;
  std::size_t require_index(const std::string& id) const;

 private:
  std::vector<Example> examples_;
  std::vector<std::string> ids_;
  FeatureMatrix features_;
  std::unordered_map<std::string, std::size_t> index_;
  Eigen::Index dimension_ = 0;
  bool unit_sphere_ = false;
  double max_norm_deviation_ = 0.0;
};

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw ContractViolation(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                            " vs " + std::to_string(b) + ")");
  }
}

}  // namespace jedi
