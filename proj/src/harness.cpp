#include "fbfkit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

namespace fbfkit {

namespace {

/// Runs fn(i) for i in [0, n) on a small worker pool. The first exception is
/// rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(body);
  }
  if (failure) std::rethrow_exception(failure);
}

double require_number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ConfigError(std::string("'") + key + "' must be a number");
  }
  return j.at(key).get<double>();
}

std::size_t require_count(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<std::int64_t>() < 0) {
    throw ConfigError(std::string("'") + key + "' must be a nonnegative integer");
  }
  return j.at(key).get<std::size_t>();
}

std::string optional_string(const json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError(std::string("'") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

std::string csv_name(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.name + "_" + to_string(cfg.kind.method) + "_seed" + std::to_string(seed) + ".csv";
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("I/O error writing " + path.string());
}

json rate_json(const std::optional<RateFit>& r) {
  if (!r) return nullptr;
  return json{{"k_min", r->k_min},         {"k_max", r->k_max},
              {"slope", r->slope},         {"intercept", r->intercept},
              {"r_squared", r->r_squared}, {"points", r->points}};
}

json number_or_string(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

json bound_json(const BoundReport& b) {
  json points = json::array();
  for (const auto& p : b.points) {
    points.push_back({{"K", p.K},
                      {"gap", number_or_string(p.gap)},
                      {"bound", number_or_string(p.bound)},
                      {"se", p.standard_error}});
  }
  return json{{"kind", to_string(b.kind)},
              {"violations", b.violations},
              {"max_violation", b.max_violation},
              {"points", points}};
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::size_t> CheckpointSpec::resolve(std::size_t K) const {
  std::set<std::size_t> out;
  switch (type) {
    case Type::Geometric:
      for (std::size_t c = 1; c <= K; c *= 2) out.insert(c);
      break;
    case Type::LogSpaced: {
      if (per_decade < 1) throw ConfigError("per_decade must be >= 1");
      for (int i = 0;; ++i) {
        const double c = std::round(std::pow(10.0, static_cast<double>(i) / per_decade));
        if (c > static_cast<double>(K)) break;
        out.insert(static_cast<std::size_t>(c));
      }
      break;
    }
    case Type::Every:
      if (stride == 0) throw ConfigError("checkpoint stride must be >= 1");
      for (std::size_t c = stride; c <= K; c += stride) out.insert(c);
      break;
  }
  if (K > 0) out.insert(K);
  return {out.begin(), out.end()};
}

std::string to_string(BoundKind b) {
  switch (b) {
    case BoundKind::None:
      return "none";
    case BoundKind::Auto:
      return "auto";
    case BoundKind::Deterministic:
      return "deterministic";
    case BoundKind::DeterministicVariable:
      return "deterministic_variable";
    case BoundKind::Stochastic:
      return "stochastic";
    case BoundKind::StochasticRefinedFbf:
      return "stochastic_refined_fbf";
    case BoundKind::StochasticRefinedFbfp:
      return "stochastic_refined_fbfp";
    case BoundKind::StochasticConstant:
      return "stochastic_constant";
  }
  return "?";
}

BoundKind bound_kind_from_string(const std::string& s) {
  for (BoundKind b : {BoundKind::None, BoundKind::Auto, BoundKind::Deterministic,
                      BoundKind::DeterministicVariable, BoundKind::Stochastic,
                      BoundKind::StochasticRefinedFbf, BoundKind::StochasticRefinedFbfp,
                      BoundKind::StochasticConstant}) {
    if (to_string(b) == s) return b;
  }
  throw ConfigError("unknown bound '" + s + "'");
}

BoundKind resolve_bound(BoundKind requested, const SolverKind& kind, const StepSchedule& schedule) {
  const bool fbf_family = kind.method == Method::FBF || kind.method == Method::FBFp;
  const bool constant = schedule.variant() == StepSchedule::Variant::Constant;
  const bool stochastic = kind.mode == Mode::Stochastic;
  if (requested == BoundKind::Auto) {
    if (!fbf_family) return BoundKind::None;
    if (!stochastic) return constant ? BoundKind::Deterministic : BoundKind::DeterministicVariable;
    if (kind.regime == StepRegime::Refined) {
      return kind.method == Method::FBF ? BoundKind::StochasticRefinedFbf
                                        : BoundKind::StochasticRefinedFbfp;
    }
    return constant ? BoundKind::StochasticConstant : BoundKind::Stochastic;
  }
  auto reject = [&] {
    throw ConfigError("bound '" + to_string(requested) + "' does not apply to " +
                      to_string(kind.method) + " (" + to_string(kind.mode) + ")");
  };
  switch (requested) {
    case BoundKind::None:
      break;
    case BoundKind::Deterministic:
      if (!fbf_family || stochastic || !constant) reject();
      break;
    case BoundKind::DeterministicVariable:
      if (!fbf_family || stochastic) reject();
      break;
    case BoundKind::Stochastic:
      if (!fbf_family || !stochastic) reject();
      break;
    case BoundKind::StochasticConstant:
      if (!fbf_family || !stochastic || !constant) reject();
      break;
    case BoundKind::StochasticRefinedFbf:
      if (kind.method != Method::FBF || !stochastic) reject();
      break;
    case BoundKind::StochasticRefinedFbfp:
      if (kind.method != Method::FBFp || !stochastic) reject();
      break;
    case BoundKind::Auto:
      break;
  }
  return requested;
}

std::optional<double> bound_value(BoundKind kind, const BoundInputs& in) {
  const double D2 = in.diameter * in.diameter;
  const double s2 = in.sigma * in.sigma;
  const double aL2 = in.alpha * in.alpha * in.L * in.L;
  const auto K = static_cast<double>(in.K);
  switch (kind) {
    case BoundKind::None:
    case BoundKind::Auto:
      return std::nullopt;
    case BoundKind::Deterministic:
      return D2 / (2.0 * in.alpha * K);
    case BoundKind::DeterministicVariable:
      return D2 / (2.0 * in.sum_alpha);
    case BoundKind::Stochastic:
      return (D2 + 18.0 * s2 * in.sum_alpha_sq) / (2.0 * in.sum_alpha);
    case BoundKind::StochasticRefinedFbf:
      return (D2 + 4.0 / (1.0 - aL2) * s2 * in.sum_alpha_sq) / (2.0 * in.sum_alpha);
    case BoundKind::StochasticRefinedFbfp:
      return (D2 + 2.0 * (5.0 + 4.0 * aL2 / (1.0 - 8.0 * aL2)) * s2 * in.sum_alpha_sq) /
             (2.0 * in.sum_alpha);
    case BoundKind::StochasticConstant:
      return D2 / (2.0 * in.alpha * K) + 9.0 * s2 * in.alpha;
  }
  return std::nullopt;
}

BoundReport check_bound(BoundKind kind, std::vector<BoundPoint> points, double slack,
                        double se_multiplier) {
  BoundReport report;
  report.kind = kind;
  report.points = std::move(points);
  if (kind == BoundKind::None) return report;
  for (const auto& p : report.points) {
    const double excess = p.gap - (p.bound + se_multiplier * p.standard_error + slack);
    if (excess > 0.0 || std::isnan(p.gap)) {
      ++report.violations;
      report.max_violation = std::max(report.max_violation,
                                      std::isfinite(excess) ? excess
                                                            : std::numeric_limits<double>::infinity());
    }
  }
  return report;
}

RateFit fit_rate(std::span<const std::pair<double, double>> samples, double k_min, double k_max) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [K, gap] : samples) {
    if (K < k_min || K > k_max) continue;
    if (!(gap > 0.0) || !std::isfinite(gap)) continue;
    xs.push_back(std::log(K));
    ys.push_back(std::log(gap));
  }
  if (xs.size() < 10) {
    throw FitError("rate fit needs at least 10 positive gaps in [" + format_double(k_min) + ", " +
                   format_double(k_max) + "], found " + std::to_string(xs.size()));
  }
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw FitError("rate fit needs at least two distinct K values");
  RateFit fit;
  fit.k_min = k_min;
  fit.k_max = k_max;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  fit.points = xs.size();
  return fit;
}

RateFit fit_rate_csv(const std::filesystem::path& csv, double k_min, double k_max,
                     const std::string& gap_column) {
  std::ifstream in(csv);
  if (!in) throw Error("cannot read " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw FitError("empty CSV " + csv.string());
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  const auto header = split(line);
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FitError("CSV " + csv.string() + " has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t iter_col = column("iter");
  const std::size_t gap_col = column(gap_column);
  std::vector<std::pair<double, double>> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() <= std::max(iter_col, gap_col)) continue;
    if (cells[gap_col].empty()) continue;
    samples.emplace_back(std::stod(cells[iter_col]), std::stod(cells[gap_col]));
  }
  return fit_rate(samples, k_min, k_max);
}

ExperimentConfig parse_config(const json& j) {
  try {
    check_keys(j,
               {"name", "problem", "solver", "schedule", "K", "seeds", "z0", "box", "gap",
                "checkpoints", "trace_stride", "bound", "slack", "rate_window", "output",
                "schema_version"},
               "config");
    for (const char* key : {"problem", "solver", "schedule", "K", "seeds", "box"}) {
      if (!j.contains(key)) throw ConfigError(std::string("config is missing '") + key + "'");
    }
    if (j.contains("schema_version") && j.at("schema_version") != kSummarySchemaVersion) {
      throw ConfigError("unsupported schema_version");
    }

    const json& pj = j.at("problem");
    check_keys(pj, {"operator", "regularizer", "sigma", "id"}, "problem");
    if (!pj.contains("operator")) throw ConfigError("problem is missing 'operator'");
    auto F = operator_from_json(pj.at("operator"));
    auto r = pj.contains("regularizer") ? regularizer_from_json(pj.at("regularizer"), F->split())
                                        : std::make_shared<ZeroRegularizer>();
    const double sigma = pj.contains("sigma") ? require_number(pj, "sigma") : 0.0;
    ProblemInstance problem(F, r, sigma, optional_string(pj, "id", "custom"));

    CompactBox box = box_from_json(j.at("box"));
    if (box.dimension() != problem.dimension()) {
      throw ConfigError("box dimension does not match the problem");
    }
    Point z0 = j.contains("z0") ? point_from_json(j.at("z0"))
                                : Point(Eigen::VectorXd(0.5 * (box.lower().vec() + box.upper().vec())));
    if (z0.size() != problem.dimension()) throw ConfigError("z0 dimension does not match");

    ExperimentConfig cfg(std::move(problem), std::move(box), std::move(z0));
    cfg.problem_json = pj;
    cfg.name = optional_string(j, "name", "run");

    const json& sj = j.at("solver");
    check_keys(sj, {"method", "mode", "pgda_variant", "regime"}, "solver");
    cfg.kind.method = method_from_string(optional_string(sj, "method", "fbf"));
    const std::string mode = optional_string(sj, "mode", "deterministic");
    if (mode == "deterministic") {
      cfg.kind.mode = Mode::Deterministic;
    } else if (mode == "stochastic") {
      cfg.kind.mode = Mode::Stochastic;
    } else {
      throw ConfigError("unknown mode '" + mode + "'");
    }
    const std::string variant = optional_string(sj, "pgda_variant", "alternating");
    if (variant == "alternating") {
      cfg.kind.pgda = PgdaVariant::Alternating;
    } else if (variant == "simultaneous") {
      cfg.kind.pgda = PgdaVariant::Simultaneous;
    } else {
      throw ConfigError("unknown pgda_variant '" + variant + "'");
    }
    const std::string regime = optional_string(sj, "regime", "standard");
    if (regime == "standard") {
      cfg.kind.regime = StepRegime::Standard;
    } else if (regime == "refined") {
      cfg.kind.regime = StepRegime::Refined;
    } else {
      throw ConfigError("unknown regime '" + regime + "'");
    }
    cfg.kind.validate();

    const json& schj = j.at("schedule");
    check_keys(schj, {"variant", "alpha"}, "schedule");
    const double alpha = require_number(schj, "alpha");
    if (!(alpha > 0.0)) throw ConfigError("schedule alpha must be positive");
    const std::string sv = optional_string(schj, "variant", "constant");
    if (sv == "constant") {
      cfg.schedule = StepSchedule::constant(alpha);
    } else if (sv == "inverse_sqrt") {
      cfg.schedule = StepSchedule::inverse_sqrt(alpha);
    } else {
      throw ConfigError("unknown schedule variant '" + sv + "'");
    }

    cfg.K = require_count(j, "K");
    if (cfg.K == 0) throw ConfigError("K must be >= 1");

    const json& seeds = j.at("seeds");
    if (!seeds.is_array()) throw ConfigError("'seeds' must be an array");
    for (const auto& s : seeds) {
      if (!s.is_number_integer() || s.get<std::int64_t>() < 0) {
        throw ConfigError("seeds must be nonnegative integers");
      }
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
    if (cfg.seeds.empty()) throw ConfigError("seed list is empty");

    if (j.contains("gap")) {
      const json& gj = j.at("gap");
      check_keys(gj, {"method", "points_per_axis", "kind", "raw_iterate"}, "gap");
      const std::string gm = optional_string(gj, "method", "closed_form");
      if (gm == "closed_form") {
        cfg.gap_method = GapMethod::ClosedForm;
      } else if (gm == "grid") {
        cfg.gap_method = GapMethod::Grid;
      } else {
        throw ConfigError("unknown gap method '" + gm + "'");
      }
      if (gj.contains("points_per_axis")) cfg.points_per_axis = require_count(gj, "points_per_axis");
      const std::string gk = optional_string(gj, "kind", "auto");
      if (gk == "minimax") {
        cfg.gap_kind = GapKind::Minimax;
      } else if (gk == "vi") {
        cfg.gap_kind = GapKind::VI;
      } else if (gk != "auto") {
        throw ConfigError("unknown gap kind '" + gk + "'");
      }
      if (gj.contains("raw_iterate")) {
        if (!gj.at("raw_iterate").is_boolean()) throw ConfigError("'raw_iterate' must be boolean");
        cfg.raw_iterate_gap = gj.at("raw_iterate").get<bool>();
      }
    }

    if (j.contains("checkpoints")) {
      const json& cj = j.at("checkpoints");
      check_keys(cj, {"type", "per_decade", "stride"}, "checkpoints");
      const std::string ct = optional_string(cj, "type", "geometric");
      if (ct == "geometric") {
        cfg.checkpoints.type = CheckpointSpec::Type::Geometric;
      } else if (ct == "log") {
        cfg.checkpoints.type = CheckpointSpec::Type::LogSpaced;
        if (cj.contains("per_decade")) {
          cfg.checkpoints.per_decade = static_cast<int>(require_count(cj, "per_decade"));
        }
      } else if (ct == "every") {
        cfg.checkpoints.type = CheckpointSpec::Type::Every;
        if (cj.contains("stride")) cfg.checkpoints.stride = require_count(cj, "stride");
      } else {
        throw ConfigError("unknown checkpoint type '" + ct + "'");
      }
    }
    if (j.contains("trace_stride")) cfg.trace_stride = require_count(j, "trace_stride");
    if (j.contains("bound")) {
      if (!j.at("bound").is_string()) throw ConfigError("'bound' must be a string");
      cfg.bound = bound_kind_from_string(j.at("bound").get<std::string>());
    }
    cfg.bound = resolve_bound(cfg.bound, cfg.kind, cfg.schedule);
    if (j.contains("slack")) cfg.slack = require_number(j, "slack");
    if (j.contains("rate_window")) {
      const json& rw = j.at("rate_window");
      if (!rw.is_array() || rw.size() != 2 || !rw[0].is_number() || !rw[1].is_number()) {
        throw ConfigError("'rate_window' must be [k_min, k_max]");
      }
      cfg.rate_window = std::make_pair(rw[0].get<double>(), rw[1].get<double>());
    }
    cfg.output = optional_string(j, "output", "");
    if (cfg.gap_kind == GapKind::Minimax) {
      // Validates that the problem supports it.
      GapEvaluator probe(cfg.problem, cfg.box, GapKind::Minimax, cfg.gap_method,
                         std::max<std::size_t>(cfg.points_per_axis, 2));
    }
    return cfg;
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

ExperimentConfig toy_config(Method method, double kappa, std::size_t K) {
  ExperimentConfig cfg(toy_problem(kappa), CompactBox::cube(2, -1.0, 1.0), Point{-0.7, 0.9});
  Eigen::MatrixXd A(1, 1);
  A(0, 0) = 1.0;
  cfg.problem_json = json{{"operator", to_json(BilinearSaddleOperator(A, 1.0))},
                          {"regularizer", to_json(*cfg.problem.r)},
                          {"sigma", 0.0},
                          {"id", cfg.problem.id}};
  cfg.name = "toy";
  cfg.kind.method = method;
  double alpha = 1.0;
  switch (method) {
    case Method::FBF:
    case Method::EG:
      alpha = 1.0;
      break;
    case Method::FBFp:
    case Method::EGp:
      alpha = 0.5;
      break;
    case Method::PGDA:
      // No theoretical cap; a small step shows the slow spiral.
      alpha = 0.01;
      break;
  }
  cfg.schedule = StepSchedule::constant(alpha);
  cfg.K = K;
  cfg.seeds = {0};
  cfg.bound = resolve_bound(BoundKind::Auto, cfg.kind, cfg.schedule);
  cfg.rate_window = std::make_pair(100.0, static_cast<double>(K));
  cfg.checkpoints.type = CheckpointSpec::Type::LogSpaced;
  cfg.checkpoints.per_decade = 20;
  return cfg;
}

namespace {

RunSummary run_single(const ExperimentConfig& cfg, std::uint64_t seed, std::uint64_t master_seed,
                      const std::filesystem::path& out_dir, std::size_t stride_override,
                      bool use_override) {
  RunSummary summary;
  summary.seed = seed;
  summary.stream_seed = derive_seed(master_seed, seed);
  summary.method = to_string(cfg.kind.method);
  summary.z0_in_box = cfg.box.contains(cfg.z0);
  if (!summary.z0_in_box) summary.warnings.emplace_back("z0 lies outside B");

  const GapKind kind = cfg.gap_kind.value_or(GapEvaluator::default_kind(cfg.problem));
  const GapEvaluator gap(cfg.problem, cfg.box, kind, cfg.gap_method, cfg.points_per_axis);
  const BoundKind bound_kind = resolve_bound(cfg.bound, cfg.kind, cfg.schedule);
  const std::size_t m = cfg.problem.dimension();

  std::ofstream csv;
  if (!out_dir.empty()) {
    summary.csv = out_dir / csv_name(cfg, seed);
    csv.open(summary.csv);
    if (!csv) throw Error("cannot write " + summary.csv.string());
    csv << "iter,alpha_k";
    for (std::size_t i = 0; i < m; ++i) csv << ",w_" << i;
    for (std::size_t i = 0; i < m; ++i) csv << ",wbar_" << i;
    csv << ",gap_wbar,bound,oracle_calls";
    if (cfg.raw_iterate_gap) csv << ",gap_w";
    csv << '\n';
  }

  std::vector<BoundPoint> points;
  RunOptions options;
  options.stride = use_override ? stride_override : cfg.trace_stride;
  options.checkpoints = cfg.checkpoints.resolve(cfg.K);
  options.on_record = [&](const TraceRecord& rec) {
    const std::size_t K = rec.k + 1;
    const double g = gap(rec.wbar).to_double();
    BoundInputs in{cfg.box.diameter(), cfg.schedule.alpha(), cfg.problem.L, cfg.problem.sigma,
                   K,                  rec.sum_alpha,        rec.sum_alpha_sq};
    const auto b = bound_value(bound_kind, in);
    summary.row_K.push_back(K);
    summary.row_calls.push_back(rec.oracle_calls);
    summary.row_gap.push_back(g);
    if (b) points.push_back({K, g, *b, 0.0});
    double raw = 0.0;
    if (cfg.raw_iterate_gap) {
      raw = gap(rec.w).to_double();
      summary.row_raw_gap.push_back(raw);
    }
    if (csv.is_open()) {
      csv << K << ',' << format_double(rec.alpha);
      for (std::size_t i = 0; i < m; ++i) csv << ',' << format_double(rec.w[i]);
      for (std::size_t i = 0; i < m; ++i) csv << ',' << format_double(rec.wbar[i]);
      csv << ',' << format_double(g) << ',' << (b ? format_double(*b) : std::string()) << ','
          << rec.oracle_calls;
      if (cfg.raw_iterate_gap) csv << ',' << format_double(raw);
      csv << '\n';
    }
  };

  try {
    const SolverTrace trace =
        run(cfg.kind, cfg.problem, cfg.z0, cfg.schedule, cfg.K, summary.stream_seed, options);
    summary.iterations = cfg.K;
    summary.oracle_calls = trace.oracle_calls;
    summary.warnings.insert(summary.warnings.end(), trace.metadata.warnings.begin(),
                            trace.metadata.warnings.end());
  } catch (const DivergenceError& e) {
    summary.status = "diverged";
    summary.error = e.what();
    summary.iterations = e.iteration();
    if (!summary.row_calls.empty()) summary.oracle_calls = summary.row_calls.back();
  }
  if (csv.is_open()) {
    csv.flush();
    if (!csv) throw Error("I/O error writing " + summary.csv.string());
  }

  summary.bound = check_bound(bound_kind, std::move(points), cfg.slack);
  if (cfg.rate_window && summary.status == "ok") {
    std::vector<std::pair<double, double>> samples;
    for (std::size_t i = 0; i < summary.row_K.size(); ++i) {
      samples.emplace_back(static_cast<double>(summary.row_K[i]), summary.row_gap[i]);
    }
    try {
      summary.rate = fit_rate(samples, cfg.rate_window->first, cfg.rate_window->second);
    } catch (const FitError& e) {
      summary.warnings.emplace_back(std::string("rate fit skipped: ") + e.what());
    }
  }
  return summary;
}

}  // namespace

std::size_t ExperimentSummary::total_violations() const {
  std::size_t total = 0;
  for (const auto& r : runs) total += r.bound.violations;
  return total;
}

bool ExperimentSummary::any_diverged() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunSummary& r) { return r.status != "ok"; });
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::uint64_t master_seed,
                                 const std::filesystem::path& out_dir) {
  if (cfg.seeds.empty()) throw ConfigError("seed list is empty");
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  ExperimentSummary summary;
  summary.name = cfg.name;
  summary.runs.resize(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), [&](std::size_t i) {
    summary.runs[i] = run_single(cfg, cfg.seeds[i], master_seed, out_dir, 0, false);
  });
  if (!out_dir.empty()) {
    json j = to_json(summary);
    j["master_seed"] = master_seed;
    write_json(out_dir / (cfg.name + "_summary.json"), j);
  }
  return summary;
}

json to_json(const ExperimentSummary& s) {
  json runs = json::array();
  for (const auto& r : s.runs) {
    runs.push_back({{"seed", r.seed},
                    {"stream_seed", r.stream_seed},
                    {"method", r.method},
                    {"status", r.status},
                    {"error", r.error},
                    {"iterations", r.iterations},
                    {"oracle_calls", r.oracle_calls},
                    {"z0_in_box", r.z0_in_box},
                    {"final_gap", r.row_gap.empty() ? json(nullptr) : number_or_string(r.row_gap.back())},
                    {"warnings", r.warnings},
                    {"csv", r.csv.string()},
                    {"bound_report", bound_json(r.bound)},
                    {"rate_fit", rate_json(r.rate)}});
  }
  return json{{"schema_version", kSummarySchemaVersion},
              {"name", s.name},
              {"total_violations", s.total_violations()},
              {"runs", runs}};
}

SweepResult expectation_sweep(const ExperimentConfig& cfg, std::uint64_t master_seed,
                              const std::filesystem::path& out_dir) {
  if (cfg.seeds.empty()) throw ConfigError("seed list is empty");
  std::vector<RunSummary> runs(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), [&](std::size_t i) {
    runs[i] = run_single(cfg, cfg.seeds[i], master_seed, {}, 0, true);
  });
  for (const auto& r : runs) {
    if (r.status != "ok") {
      throw DivergenceError("seed " + std::to_string(r.seed) + ": " + r.error, r.iterations, {});
    }
  }

  SweepResult result;
  result.seeds = runs.size();
  const auto& ref = runs.front();
  const auto n = static_cast<double>(runs.size());
  std::vector<BoundPoint> points;
  for (std::size_t c = 0; c < ref.row_K.size(); ++c) {
    // Offsets from the first run keep the mean exact when all runs agree.
    const double base = ref.row_gap[c];
    double offset = 0.0;
    for (const auto& r : runs) offset += r.row_gap[c] - base;
    const double mean = base + offset / n;
    double var = 0.0;
    for (const auto& r : runs) var += (r.row_gap[c] - mean) * (r.row_gap[c] - mean);
    const double se = runs.size() > 1 ? std::sqrt(var / (n - 1.0)) / std::sqrt(n) : 0.0;
    SweepPoint sp{ref.row_K[c], mean, se, std::numeric_limits<double>::quiet_NaN()};
    for (const auto& bp : ref.bound.points) {
      if (bp.K == sp.K) sp.bound = bp.bound;
    }
    if (!std::isnan(sp.bound)) points.push_back({sp.K, mean, sp.bound, se});
    result.points.push_back(sp);
  }
  result.report = check_bound(ref.bound.kind, std::move(points), cfg.slack, 2.0);
  if (cfg.rate_window) {
    std::vector<std::pair<double, double>> samples;
    for (const auto& p : result.points) samples.emplace_back(static_cast<double>(p.K), p.mean_gap);
    result.rate = fit_rate(samples, cfg.rate_window->first, cfg.rate_window->second);
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto path = out_dir / (cfg.name + "_sweep.csv");
    std::ofstream csv(path);
    if (!csv) throw Error("cannot write " + path.string());
    csv << "iter,mean_gap,se,bound,n_seeds\n";
    for (const auto& p : result.points) {
      csv << p.K << ',' << format_double(p.mean_gap) << ',' << format_double(p.standard_error)
          << ',' << (std::isnan(p.bound) ? std::string() : format_double(p.bound)) << ','
          << result.seeds << '\n';
    }
    if (!csv) throw Error("I/O error writing " + path.string());
    json j = to_json(result);
    j["master_seed"] = master_seed;
    j["name"] = cfg.name;
    write_json(out_dir / (cfg.name + "_sweep_summary.json"), j);
  }
  return result;
}

json to_json(const SweepResult& s) {
  json pts = json::array();
  for (const auto& p : s.points) {
    pts.push_back({{"K", p.K},
                   {"mean_gap", number_or_string(p.mean_gap)},
                   {"se", p.standard_error},
                   {"bound", std::isnan(p.bound) ? json(nullptr) : json(p.bound)}});
  }
  return json{{"schema_version", kSummarySchemaVersion},
              {"seeds", s.seeds},
              {"points", pts},
              {"bound_report", bound_json(s.report)},
              {"rate_fit", rate_json(s.rate)}};
}

CompareResult compare_methods(const std::vector<ExperimentConfig>& cfgs, std::uint64_t master_seed,
                              const std::filesystem::path& out_dir) {
  if (cfgs.empty()) throw ConfigError("compare needs at least one config");
  for (const auto& c : cfgs) {
    if (c.problem_json != cfgs.front().problem_json) {
      throw ConfigError("compared configs must share the same problem");
    }
    if (!(c.box.lower() == cfgs.front().box.lower()) || !(c.box.upper() == cfgs.front().box.upper())) {
      throw ConfigError("compared configs must share the same box B");
    }
    if (c.seeds.empty()) throw ConfigError("seed list is empty");
  }
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  CompareResult result;
  result.runs.resize(cfgs.size());
  parallel_for(cfgs.size(), [&](std::size_t i) {
    ExperimentSummary s;
    s.name = cfgs[i].name;
    s.runs.push_back(run_single(cfgs[i], cfgs[i].seeds.front(), master_seed, out_dir, 0, false));
    result.runs[i] = std::move(s);
  });

  result.budget = std::numeric_limits<std::uint64_t>::max();
  for (const auto& s : result.runs) result.budget = std::min(result.budget, s.runs.front().oracle_calls);

  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    const RunSummary& r = result.runs[i].runs.front();
    CompareRow row;
    row.name = cfgs[i].name;
    row.method = r.method;
    row.iterations = r.iterations;
    row.oracle_calls = r.oracle_calls;
    row.final_gap = r.row_gap.empty() ? std::numeric_limits<double>::quiet_NaN() : r.row_gap.back();
    row.gap_at_budget = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t c = 0; c < r.row_K.size(); ++c) {
      if (r.row_calls[c] <= result.budget) {
        row.gap_at_budget = r.row_gap[c];
        row.K_at_budget = r.row_K[c];
      }
    }
    row.violations = r.bound.violations;
    row.status = r.status;
    result.rows.push_back(row);
  }

  if (!out_dir.empty()) {
    const auto path = out_dir / "compare.csv";
    std::ofstream csv(path);
    if (!csv) throw Error("cannot write " + path.string());
    csv << "name,method,iter,oracle_calls,gap_wbar,bound\n";
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
      const RunSummary& r = result.runs[i].runs.front();
      std::map<std::size_t, double> bounds;
      for (const auto& bp : r.bound.points) bounds[bp.K] = bp.bound;
      for (std::size_t c = 0; c < r.row_K.size(); ++c) {
        auto it = bounds.find(r.row_K[c]);
        csv << cfgs[i].name << ',' << r.method << ',' << r.row_K[c] << ',' << r.row_calls[c] << ','
            << format_double(r.row_gap[c]) << ','
            << (it == bounds.end() ? std::string() : format_double(it->second)) << '\n';
      }
    }
    if (!csv) throw Error("I/O error writing " + path.string());
    json j = to_json(result);
    j["master_seed"] = master_seed;
    write_json(out_dir / "compare_summary.json", j);
  }
  return result;
}

std::string format_table(const CompareResult& r) {
  std::ostringstream out;
  out << "common oracle budget: " << r.budget << '\n';
  out << std::left << std::setw(14) << "name" << std::setw(8) << "method" << std::right
      << std::setw(10) << "K" << std::setw(12) << "calls" << std::setw(16) << "final_gap"
      << std::setw(10) << "K@budget" << std::setw(16) << "gap@budget" << std::setw(12)
      << "violations" << "  status\n";
  for (const auto& row : r.rows) {
    out << std::left << std::setw(14) << row.name << std::setw(8) << row.method << std::right
        << std::setw(10) << row.iterations << std::setw(12) << row.oracle_calls << std::setw(16)
        << std::setprecision(6) << row.final_gap << std::setw(10) << row.K_at_budget
        << std::setw(16) << row.gap_at_budget << std::setw(12) << row.violations << "  "
        << row.status << '\n';
  }
  return out.str();
}

json to_json(const CompareResult& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"name", row.name},
                    {"method", row.method},
                    {"iterations", row.iterations},
                    {"oracle_calls", row.oracle_calls},
                    {"final_gap", number_or_string(row.final_gap)},
                    {"K_at_budget", row.K_at_budget},
                    {"gap_at_budget", number_or_string(row.gap_at_budget)},
                    {"violations", row.violations},
                    {"status", row.status}});
  }
  return json{{"schema_version", kSummarySchemaVersion}, {"budget", r.budget}, {"rows", rows}};
}

}  // namespace fbfkit
