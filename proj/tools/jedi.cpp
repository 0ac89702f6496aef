// jedi: dataset generation, simulated teaching runs, run reports, and the
// live teaching service.

#include "jedi/experiment.hpp"
#include "jedi/service/server.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace jedi;

namespace {

constexpr int kValidationExit = 2;

struct MixtureFlags {
  std::vector<double> mu_pos1{0.0, 8.0}, mu_pos2{8.0, 0.0}, mu_neg1{-8.0, 0.0}, mu_neg2{0.0, -8.0};
  std::vector<double> sigma1{12.0, 6.0, 6.0, 12.0}, sigma2{10.0, 5.0, 5.0, 10.0};
  double major_weight = 2.0 / 3.0;
  std::size_t per_class = 150;
  std::size_t eval_per_class = 150;

  void add(CLI::App& app) {
    app.add_option("--mu-pos1", mu_pos1, "mixture2d: major positive mean")->expected(2)->capture_default_str();
    app.add_option("--mu-pos2", mu_pos2, "mixture2d: minor positive mean")->expected(2)->capture_default_str();
    app.add_option("--mu-neg1", mu_neg1, "mixture2d: major negative mean")->expected(2)->capture_default_str();
    app.add_option("--mu-neg2", mu_neg2, "mixture2d: minor negative mean")->expected(2)->capture_default_str();
    app.add_option("--sigma1", sigma1, "mixture2d: major covariance, row-major")->expected(4)->capture_default_str();
    app.add_option("--sigma2", sigma2, "mixture2d: minor covariance, row-major")->expected(4)->capture_default_str();
    app.add_option("--major-weight", major_weight, "mixture2d: weight of the major component")->capture_default_str();
    app.add_option("--per-class", per_class, "mixture2d: teaching examples per class")->capture_default_str();
    app.add_option("--eval-per-class", eval_per_class, "mixture2d: evaluation examples per class")->capture_default_str();
  }

  Mixture2DParams params() const {
    Mixture2DParams p;
    p.mu_pos1 = {mu_pos1[0], mu_pos1[1]};
    p.mu_pos2 = {mu_pos2[0], mu_pos2[1]};
    p.mu_neg1 = {mu_neg1[0], mu_neg1[1]};
    p.mu_neg2 = {mu_neg2[0], mu_neg2[1]};
    p.sigma1 << sigma1[0], sigma1[1], sigma1[2], sigma1[3];
    p.sigma2 << sigma2[0], sigma2[1], sigma2[2], sigma2[3];
    p.major_weight = major_weight;
    p.per_class = per_class;
    p.eval_per_class = eval_per_class;
    return p;
  }
};

struct GaussianFlags {
  std::size_t dimension = 10;
  double mean_offset = 0.6;
  double var_lo = 1.0, var_hi = 10.0;
  std::size_t per_class = 1000;

  void add(CLI::App& app) {
    app.add_option("--dimension", dimension, "gaussian10d: feature dimension")->capture_default_str();
    app.add_option("--mean-offset", mean_offset, "gaussian10d: class means at +/- this value")->capture_default_str();
    app.add_option("--var-lo", var_lo, "gaussian10d: smallest diagonal variance")->capture_default_str();
    app.add_option("--var-hi", var_hi, "gaussian10d: largest diagonal variance")->capture_default_str();
    app.add_option("--gaussian-per-class", per_class, "gaussian10d: examples per class before the split")->capture_default_str();
  }

  GaussianParams params() const {
    GaussianParams p;
    p.dimension = dimension;
    p.mean_offset = mean_offset;
    p.var_lo = var_lo;
    p.var_hi = var_hi;
    p.per_class = per_class;
    return p;
  }
};

// "1..5", "3", or "1,4,9".
std::vector<std::uint64_t> parse_seeds(const std::vector<std::string>& items) {
  std::vector<std::uint64_t> out;
  auto number = [](const std::string& s) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || s.front() == '-') throw ValidationError("bad seed '" + s + "'");
    return static_cast<std::uint64_t>(v);
  };
  for (const std::string& item : items) {
    std::stringstream parts(item);
    std::string part;
    while (std::getline(parts, part, ',')) {
      if (part.empty()) continue;
      const auto dots = part.find("..");
      if (dots == std::string::npos) {
        out.push_back(number(part));
        continue;
      }
      const auto lo = number(part.substr(0, dots));
      const auto hi = number(part.substr(dots + 2));
      if (hi < lo || hi - lo > 100000) throw ValidationError("bad seed range '" + part + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    }
  }
  if (out.empty()) throw ValidationError("at least one seed is required");
  return out;
}

std::string beta_name(double b) {
  std::ostringstream s;
  s << b;
  return s.str();
}

// ------------------------------------------------------------------ datagen

struct DatagenCmd {
  std::string kind = "mixture2d";
  std::uint64_t seed = 0;
  fs::path out;
  MixtureFlags mixture;
  GaussianFlags gaussian;
};

int run_datagen(const DatagenCmd& c) {
  Dataset d = c.kind == "mixture2d" ? gen_mixture2d(c.mixture.params(), c.seed) : gen_gaussian10d(c.gaussian.params(), c.seed);
  fs::create_directories(c.out);
  write_csv(c.out / "teach.csv", d.teach);
  write_csv(c.out / "eval.csv", d.eval);
  std::cout << "wrote " << d.teach.size() << " teaching and " << d.eval.size() << " evaluation examples ("
            << d.teach.dimension() << " features) to " << c.out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------- sim

struct SimCmd {
  std::string dataset = "mixture2d";
  std::vector<std::string> teachers{"jedi"};
  std::string mode;  // omniscient | harmonic; default depends on the dataset
  std::vector<double> betas{0.5};
  std::optional<double> learner_beta;
  double eta0 = 0.03;
  std::optional<double> eta_c;
  std::size_t max_iter = 500;
  std::size_t cold_start = 1;
  double noise = -1.0;  // negative: dataset default
  double tolerance = 1e-4;
  double bandwidth_factor = 1.0;
  double split_fraction = 0.2;
  std::string momentum = "scaled";
  std::vector<std::string> seeds{"1"};
  fs::path out;
  MixtureFlags mixture;
  GaussianFlags gaussian;
};

ExperimentConfig sim_config(const SimCmd& c) {
  ExperimentConfig config;
  double default_c = 200.0;
  bool default_omniscient = false;
  double default_noise = 0.01;
  if (c.dataset == "mixture2d") {
    config.dataset.kind = DatasetKind::Mixture2D;
    config.dataset.mixture = c.mixture.params();
    default_c = 0.0;
    default_omniscient = true;
    default_noise = 0.0;
  } else if (c.dataset == "gaussian10d") {
    config.dataset.kind = DatasetKind::Gaussian10D;
    config.dataset.gaussian = c.gaussian.params();
    default_c = 20.0;
  } else {
    config.dataset.kind = DatasetKind::Csv;
    config.dataset.path = c.dataset;
    config.dataset.split_fraction = c.split_fraction;
    if (!fs::exists(config.dataset.path)) throw ValidationError("dataset not found: " + c.dataset);
  }
  const bool omniscient = c.mode.empty() ? default_omniscient : c.mode == "omniscient";
  const double eta_c = c.eta_c.value_or(default_c);
  config.seeds = parse_seeds(c.seeds);
  config.noise_std = c.noise >= 0.0 ? c.noise : default_noise;
  config.bandwidth_factor = c.bandwidth_factor;

  TeacherKind base;
  base.eta = eta_c > 0.0 ? EtaSchedule::decaying(c.eta0, eta_c) : EtaSchedule::constant(c.eta0);
  base.max_iter = c.max_iter;
  base.cold_start_count = c.cold_start;
  base.convergence_tol = c.tolerance;
  base.momentum_form = c.momentum == "raw" ? MomentumForm::Raw : MomentumForm::Scaled;

  for (const std::string& t : c.teachers) {
    TeacherKind k = base;
    if (t == "jedi") {
      k.variant = omniscient ? TeacherVariant::JediOmniscient : TeacherVariant::JediHarmonic;
      for (double b : c.betas) {
        k.beta = b;
        config.teachers.push_back({"jedi-" + beta_name(b), k, c.learner_beta.value_or(b)});
      }
      continue;
    }
    k.beta = 0.0;
    if (t == "imt") k.variant = omniscient ? TeacherVariant::ImtOmniscient : TeacherVariant::ImtHarmonic;
    else if (t == "rt") k.variant = TeacherVariant::Random;
    else k.variant = TeacherVariant::Sgd;
    config.teachers.push_back({t, k, c.learner_beta.value_or(0.0)});
  }
  return config;
}

int run_sim(const SimCmd& c) {
  const ExperimentConfig config = sim_config(c);
  const ExperimentReport report = run_experiment(config);
  write_report(c.out, report);
  for (const auto& r : report.runs) {
    std::cout << r.teacher << " seed=" << r.seed << " steps=" << r.run.events.size() << " unique=" << r.run.unique_count
              << " final_dist_sq=" << r.run.concept_trace.back() << " eval_accuracy=" << r.eval_accuracy << '\n';
  }
  std::cout << "wrote " << report.runs.size() << " runs to " << c.out.string() << '\n';
  return 0;
}

// ------------------------------------------------------------------- report

struct ReportCmd {
  fs::path runs;
  std::string format = "csv";
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int run_report(const ReportCmd& c) {
  const std::vector<nlohmann::json> runs = read_manifest(c.runs);
  if (runs.empty()) throw ValidationError("manifest in " + c.runs.string() + " lists no runs");
  std::vector<std::string> order;
  std::map<std::string, std::vector<const nlohmann::json*>> by_teacher;
  for (const auto& r : runs) {
    const std::string t = r.at("teacher").get<std::string>();
    if (!by_teacher.count(t)) order.push_back(t);
    by_teacher[t].push_back(&r);
  }
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& t : order) {
    std::vector<double> unique, dist, acc;
    for (const auto* r : by_teacher[t]) {
      unique.push_back(r->at("unique_count").get<double>());
      dist.push_back(r->at("final_dist_sq").get<double>());
      acc.push_back(r->at("eval_accuracy").get<double>());
    }
    double mean_acc = 0.0;
    for (double a : acc) mean_acc += a / static_cast<double>(acc.size());
    summary.push_back({{"teacher", t},
                       {"runs", unique.size()},
                       {"median_unique_count", median(unique)},
                       {"median_final_dist_sq", median(dist)},
                       {"mean_eval_accuracy", mean_acc}});
  }
  if (c.format == "json") {
    std::cout << nlohmann::json{{"summary", summary}, {"runs", runs}}.dump(2) << '\n';
    return 0;
  }
  std::cout << "teacher,runs,median_unique_count,median_final_dist_sq,mean_eval_accuracy\n";
  std::cout.precision(10);
  for (const auto& s : summary) {
    std::cout << s["teacher"].get<std::string>() << ',' << s["runs"] << ',' << s["median_unique_count"].get<double>() << ','
              << s["median_final_dist_sq"].get<double>() << ',' << s["mean_eval_accuracy"].get<double>() << '\n';
  }
  return 0;
}

// -------------------------------------------------------------------- serve

struct ServeCmd {
  fs::path datasets;
  fs::path log_dir = "sessions";
  std::optional<fs::path> assets;
  std::string host = "127.0.0.1";
  int port = 8080;
  double bandwidth_factor = 1.0;
  std::uint64_t split_seed = 0;
};

service::TeachServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int run_serve(const ServeCmd& c) {
  service::DatasetRegistry registry;
  registry.load_dir(c.datasets, c.bandwidth_factor, c.split_seed);
  if (registry.names().empty()) throw ValidationError("no datasets found in " + c.datasets.string());
  service::TeachServer server(registry, {c.log_dir, c.assets});
  const int port = server.bind(c.host, c.port);
  if (port <= 0) {
    std::cerr << "error: cannot bind " << c.host << ':' << c.port << '\n';
    return 1;
  }
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on " << c.host << ':' << port << " (" << registry.names().size() << " datasets, "
            << server.recovered_count() << " sessions recovered)" << std::endl;
  const bool ok = server.listen();
  g_server = nullptr;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive crowd-teaching engine"};
  app.set_config("--config", "", "key = value config file; command-line flags take precedence");
  app.require_subcommand(1);

  DatagenCmd datagen;
  auto* dg = app.add_subcommand("datagen", "Generate a synthetic dataset as teach.csv and eval.csv");
  dg->add_option("--kind", datagen.kind)->check(CLI::IsMember({"mixture2d", "gaussian10d"}))->capture_default_str();
  dg->add_option("--seed", datagen.seed)->capture_default_str();
  dg->add_option("--out", datagen.out, "output directory")->required();
  datagen.mixture.add(*dg);
  datagen.gaussian.add(*dg);

  SimCmd sim;
  auto* sm = app.add_subcommand("sim", "Run simulated teaching experiments");
  sm->add_option("--dataset", sim.dataset, "mixture2d, gaussian10d, a CSV file, or a directory with teach.csv and eval.csv")
      ->capture_default_str();
  sm->add_option("--teacher", sim.teachers, "jedi, imt, rt, sgd (repeatable)")
      ->check(CLI::IsMember({"jedi", "imt", "rt", "sgd"}))
      ->capture_default_str();
  sm->add_option("--mode", sim.mode, "teacher knowledge: omniscient or harmonic")->check(CLI::IsMember({"omniscient", "harmonic"}));
  sm->add_option("--beta", sim.betas, "memory decay for jedi (repeatable)")->check(CLI::Range(0.0, 0.999999))->capture_default_str();
  sm->add_option("--learner-beta", sim.learner_beta, "learner memory decay (default: the teacher's beta, 0 for baselines)")
      ->check(CLI::Range(0.0, 0.999999));
  sm->add_option("--eta0", sim.eta0)->check(CLI::PositiveNumber)->capture_default_str();
  sm->add_option("--eta-c", sim.eta_c, "decay constant c in eta_t = c/(c+t) eta0; 0 keeps eta constant")->check(CLI::NonNegativeNumber);
  sm->add_option("--max-iter", sim.max_iter)->capture_default_str();
  sm->add_option("--cold-start", sim.cold_start)->capture_default_str();
  sm->add_option("--noise", sim.noise, "learner noise std after each update (default 0 for mixture2d, else 0.01)");
  sm->add_option("--tolerance", sim.tolerance, "omniscient stop threshold on ||w - w*||^2")->capture_default_str();
  sm->add_option("--bandwidth-factor", sim.bandwidth_factor)->check(CLI::PositiveNumber)->capture_default_str();
  sm->add_option("--split", sim.split_fraction, "teaching share when splitting a single CSV")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sm->add_option("--momentum", sim.momentum, "scaled or raw momentum in the score")->check(CLI::IsMember({"scaled", "raw"}))->capture_default_str();
  sm->add_option("--seeds", sim.seeds, "seeds, e.g. 1..5 or 1,2,7")->capture_default_str();
  sm->add_option("--out", sim.out, "output directory")->required();
  sim.mixture.add(*sm);
  sim.gaussian.add(*sm);

  ReportCmd report;
  auto* rp = app.add_subcommand("report", "Summarize a sim output directory");
  rp->add_option("--runs", report.runs)->required();
  rp->add_option("--format", report.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  ServeCmd serve;
  auto* sv = app.add_subcommand("serve", "Host live teaching sessions over HTTP");
  sv->add_option("--datasets", serve.datasets, "directory of datasets")->required();
  sv->add_option("--log", serve.log_dir, "session log directory")->capture_default_str();
  sv->add_option("--assets", serve.assets, "static files served under /assets");
  sv->add_option("--host", serve.host)->capture_default_str();
  sv->add_option("--port", serve.port, "0 picks a free port")->check(CLI::Range(0, 65535))->capture_default_str();
  sv->add_option("--bandwidth-factor", serve.bandwidth_factor)->check(CLI::PositiveNumber)->capture_default_str();
  sv->add_option("--split-seed", serve.split_seed, "seed for splitting single-file datasets")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationExit;
  }

  try {
    if (*dg) return run_datagen(datagen);
    if (*sm) return run_sim(sim);
    if (*rp) return run_report(report);
    return run_serve(serve);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationExit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
