#include "jedi/types.hpp"

#include <cmath>

namespace jedi {

Label label_from_int(long v) {
  if (v == 1) return Label::Positive;
  if (v == -1 || v == 0) return Label::Negative;
  throw ValidationError("label must be -1, 0 or 1, got " + std::to_string(v));
}

double distance_sq(const Concept& a, const Concept& b) {
  require_same_dim(a.dim(), b.dim(), "distance_sq");
  return (a.w - b.w).squaredNorm();
}

TeachingPool::TeachingPool(std::vector<Example> examples) : examples_(std::move(examples)) {
  if (examples_.empty()) throw ValidationError("teaching pool must not be empty");
  dimension_ = examples_.front().x.size();
  if (dimension_ == 0) throw ValidationError("teaching pool examples must have at least one feature");
  features_.resize(static_cast<Eigen::Index>(examples_.size()), dimension_);
  ids_.reserve(examples_.size());
  std::size_t positives = 0;
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const Example& e = examples_[i];
    if (e.x.size() != dimension_) {
      throw ValidationError("example '" + e.id + "' has dimension " + std::to_string(e.x.size()) +
                            ", expected " + std::to_string(dimension_));
    }
    if (!e.x.allFinite()) throw ValidationError("example '" + e.id + "' has non-finite features");
    if (!index_.emplace(e.id, i).second) throw ValidationError("duplicate example id '" + e.id + "'");
    features_.row(static_cast<Eigen::Index>(i)) = e.x.transpose();
    ids_.push_back(e.id);
    if (e.y == Label::Positive) ++positives;
    max_norm_deviation_ = std::max(max_norm_deviation_, std::abs(e.x.norm() - 1.0));
  }
  if (positives == 0 || positives == examples_.size()) {
    throw ValidationError("teaching pool needs at least one example of each label");
  }
  unit_sphere_ = max_norm_deviation_ <= kUnitSphereTolerance;
}

std::size_t TeachingPool::count(Label y) const {
  std::size_t n = 0;
  for (const auto& e : examples_) n += (e.y == y);
  return n;
}

std::optional<std::size_t> TeachingPool::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t TeachingPool::require_index(const std::string& id) const {
  auto idx = index_of(id);
  if (!idx) throw ValidationError("unknown example id '" + id + "'");
  return *idx;
}

}  // namespace jedi
