#include "jedi/dataset.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace jedi {

std::string make_id(std::string_view prefix, std::size_t index, std::size_t total) {
  const std::size_t width = std::max<std::size_t>(1, std::to_string(total > 0 ? total - 1 : 0).size());
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return std::string(prefix) + digits;
}

namespace {

Eigen::Matrix2d cholesky_factor(const Eigen::Matrix2d& sigma, const char* name) {
  if (!sigma.isApprox(sigma.transpose(), 1e-12)) {
    throw ValidationError(std::string(name) + " is not symmetric");
  }
  Eigen::LLT<Eigen::Matrix2d> llt(sigma);
  if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().array() > 0.0).all()) {
    throw ValidationError(std::string(name) + " is not positive definite");
  }
  return llt.matrixL();
}

std::vector<Example> sample_mixture(const Mixture2DParams& p, const Eigen::Matrix2d& l1, const Eigen::Matrix2d& l2,
                                    std::size_t per_class, std::string_view prefix, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution major(p.major_weight);
  std::vector<Example> out;
  out.reserve(2 * per_class);
  for (Label y : {Label::Positive, Label::Negative}) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const bool first = major(rng);
      const Eigen::Vector2d& mu = y == Label::Positive ? (first ? p.mu_pos1 : p.mu_pos2)
                                                       : (first ? p.mu_neg1 : p.mu_neg2);
      Eigen::Vector2d z(normal(rng), normal(rng));
      const Eigen::Vector2d x = mu + (first ? l1 : l2) * z;
      out.push_back({make_id(prefix, out.size(), 2 * per_class), Vector(x), y, {}});
    }
  }
  return out;
}

}  // namespace

Dataset gen_mixture2d(const Mixture2DParams& params, std::uint64_t seed) {
  if (params.per_class < 1 || params.eval_per_class < 1) throw ValidationError("mixture2d: per-class counts must be >= 1");
  if (!(params.major_weight > 0.0 && params.major_weight < 1.0)) {
    throw ValidationError("mixture2d: component weight must lie in (0, 1)");
  }
  const Eigen::Matrix2d l1 = cholesky_factor(params.sigma1, "sigma1");
  const Eigen::Matrix2d l2 = cholesky_factor(params.sigma2, "sigma2");
  Rng rng = make_stream(seed, streams::kDataset);
  Dataset ds;
  ds.teach = TeachingPool(sample_mixture(params, l1, l2, params.per_class, "t", rng));
  ds.eval = TeachingPool(sample_mixture(params, l1, l2, params.eval_per_class, "e", rng));
  return ds;
}

Dataset gen_gaussian10d(const GaussianParams& params, std::uint64_t seed) {
  if (params.dimension < 1) throw ValidationError("gaussian: dimension must be >= 1");
  if (params.per_class < 2) throw ValidationError("gaussian: per-class count must be >= 2");
  if (!(params.var_lo > 0.0 && params.var_hi >= params.var_lo)) {
    throw ValidationError("gaussian: variance range must satisfy 0 < lo <= hi");
  }
  Rng rng = make_stream(seed, streams::kDataset);
  std::uniform_real_distribution<double> var(params.var_lo, params.var_hi);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(params.dimension);
  Vector diag(m);
  for (Eigen::Index d = 0; d < m; ++d) diag[d] = var(rng);
  const Vector sd = diag.array().sqrt().matrix();

  std::vector<Example> all;
  all.reserve(2 * params.per_class);
  for (Label y : {Label::Positive, Label::Negative}) {
    const double mu = y == Label::Positive ? params.mean_offset : -params.mean_offset;
    for (std::size_t i = 0; i < params.per_class; ++i) {
      Vector x(m);
      for (Eigen::Index d = 0; d < m; ++d) x[d] = mu + sd[d] * normal(rng);
      all.push_back({make_id("g", all.size(), 2 * params.per_class), std::move(x), y, {}});
    }
  }
  auto [teach, eval] = split(TeachingPool(std::move(all)), params.teach_fraction, seed);
  return {std::move(teach), std::move(eval), diag};
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) throw ValidationError(where + ": '" + s + "' is not a number");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

TeachingPool parse_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(source + ": empty file");
  const std::vector<std::string> header = split_fields(line);
  if (header.size() < 3 || lower(header[0]) != "id" || lower(header[1]) != "label") {
    throw ValidationError(source + ": header must start with id,label followed by feature columns");
  }
  std::optional<std::size_t> payload_col;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (lower(header[c]) == "payload") {
      payload_col = c;
    } else {
      feature_cols.push_back(c);
    }
  }
  if (feature_cols.empty()) throw ValidationError(source + ": no feature columns");

  std::vector<Example> examples;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> fields = split_fields(line);
    const std::string where = source + " row " + std::to_string(row);
    if (fields.size() != header.size()) {
      throw ValidationError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    }
    Example e;
    e.id = fields[0];
    if (e.id.empty()) throw ValidationError(where + ": empty id");
    if (auto [it, inserted] = seen.emplace(e.id, row); !inserted) {
      throw ValidationError(where + ": duplicate id '" + e.id + "' (first seen at row " + std::to_string(it->second) + ")");
    }
    const double label = parse_double(fields[1], where);
    if (label != std::floor(label)) throw ValidationError(where + ": label must be -1, 0 or 1");
    try {
      e.y = label_from_int(static_cast<long>(label));
    } catch (const ValidationError& err) {
      throw ValidationError(where + ": " + err.what());
    }
    e.x.resize(static_cast<Eigen::Index>(feature_cols.size()));
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      e.x[static_cast<Eigen::Index>(k)] = parse_double(fields[feature_cols[k]], where);
    }
    if (payload_col) e.payload = fields[*payload_col];
    examples.push_back(std::move(e));
  }
  if (examples.empty()) throw ValidationError(source + ": no data rows");
  try {
    return TeachingPool(std::move(examples));
  } catch (const ValidationError& err) {
    throw ValidationError(source + ": " + err.what());
  }
}

TeachingPool load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_csv(in, path.string());
}

void write_csv(const std::filesystem::path& path, const TeachingPool& pool) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  bool payload = false;
  for (const auto& e : pool.examples()) payload = payload || !e.payload.empty();
  out << "id,label";
  for (Eigen::Index d = 0; d < pool.dimension(); ++d) out << ",f" << (d + 1);
  if (payload) out << ",payload";
  out << '\n';
  for (const auto& e : pool.examples()) {
    out << e.id << ',' << static_cast<int>(e.y);
    for (Eigen::Index d = 0; d < e.x.size(); ++d) out << ',' << format_double(e.x[d]);
    if (payload) out << ',' << e.payload;
    out << '\n';
  }
}

std::pair<TeachingPool, TeachingPool> split(const TeachingPool& pool, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("split fraction must lie in (0, 1)");
  Rng rng = make_stream(seed, streams::kSplit);
  std::vector<Example> teach;
  std::vector<Example> eval;
  for (Label y : {Label::Positive, Label::Negative}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool[i].y == y) idx.push_back(i);
    }
    if (idx.size() < 2) throw ValidationError("split: every class needs at least 2 examples");
    // Fisher-Yates with the portable index draw.
    for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[uniform_index(rng, i + 1)]);
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    take = std::clamp<std::size_t>(take, 1, idx.size() - 1);
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end());
    for (std::size_t k = 0; k < idx.size(); ++k) (k < take ? teach : eval).push_back(pool[idx[k]]);
  }
  auto by_id = [](const Example& a, const Example& b) { return a.id < b.id; };
  std::sort(teach.begin(), teach.end(), by_id);
  std::sort(eval.begin(), eval.end(), by_id);
  return {TeachingPool(std::move(teach)), TeachingPool(std::move(eval))};
}

}  // namespace jedi
