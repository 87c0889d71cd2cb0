#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fbfkit/gap.hpp"
#include "fbfkit/serialization.hpp"
#include "fbfkit/solvers.hpp"

namespace fbfkit {

inline constexpr int kSummarySchemaVersion = 1;

/// Iteration counts at which the ergodic gap is evaluated.
struct CheckpointSpec {
  enum class Type { Geometric, LogSpaced, Every };
  Type type = Type::Geometric;
  /// Geometric: 1, 2, 4, ... (ratio 2).
  /// LogSpaced: round(10^(i / per_decade)), deduplicated.
  int per_decade = 20;
  /// Every: multiples of stride.
  std::size_t stride = 1;

  /// Sorted, unique, within [1, K], always containing K.
  std::vector<std::size_t> resolve(std::size_t K) const;
};

/// Which convergence guarantee the bound column reports.
enum class BoundKind {
  None,
  Auto,
  /// D^2 / (2 alpha K), constant step
  Deterministic,
  /// D^2 / (2 sum alpha_k)
  DeterministicVariable,
  /// (D^2 + 18 sigma^2 sum alpha_k^2) / (2 sum alpha_k)
  Stochastic,
  /// (D^2 + 4 (1 - alpha^2 L^2)^-1 sigma^2 sum alpha_k^2) / (2 sum alpha_k), FBF
  StochasticRefinedFbf,
  /// (D^2 + 2 (5 + 4 a^2 L^2 / (1 - 8 a^2 L^2)) sigma^2 sum alpha_k^2) / (2 sum alpha_k), FBFp
  StochasticRefinedFbfp,
  /// D^2 / (2 alpha K) + 9 sigma^2 alpha, constant step
  StochasticConstant,
};

std::string to_string(BoundKind b);
BoundKind bound_kind_from_string(const std::string& s);

/// Resolves Auto to the guarantee that covers `kind` + `schedule`, and
/// rejects explicit choices that do not apply (ConfigError).
BoundKind resolve_bound(BoundKind requested, const SolverKind& kind, const StepSchedule& schedule);

struct BoundInputs {
  double diameter = 0.0;
  double alpha = 0.0;
  double L = 1.0;
  double sigma = 0.0;
  std::size_t K = 0;
  double sum_alpha = 0.0;
  double sum_alpha_sq = 0.0;
};

/// Value of the bound at K; nullopt for BoundKind::None.
std::optional<double> bound_value(BoundKind kind, const BoundInputs& in);

struct BoundPoint {
  std::size_t K = 0;
  double gap = 0.0;
  double bound = 0.0;
  double standard_error = 0.0;
};

struct BoundReport {
  BoundKind kind = BoundKind::None;
  std::vector<BoundPoint> points;
  std::size_t violations = 0;
  double max_violation = 0.0;
};

/// Counts points with gap > bound + se_multiplier * SE + slack.
BoundReport check_bound(BoundKind kind, std::vector<BoundPoint> points, double slack,
                        double se_multiplier = 0.0);

struct RateFit {
  double k_min = 0.0;
  double k_max = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// OLS of log(gap) on log(K) over window [k_min, k_max], using only
/// positive finite gaps. Needs at least 10 such points (FitError otherwise).
RateFit fit_rate(std::span<const std::pair<double, double>> samples, double k_min, double k_max);
/// Same, reading columns `iter` and `gap_column` of a trace CSV.
RateFit fit_rate_csv(const std::filesystem::path& csv, double k_min, double k_max,
                     const std::string& gap_column = "gap_wbar");

struct ExperimentConfig {
  ExperimentConfig(ProblemInstance p, CompactBox b, Point start)
      : problem(std::move(p)), z0(std::move(start)), box(std::move(b)) {}

  std::string name = "run";
  json problem_json;
  ProblemInstance problem;
  SolverKind kind;
  StepSchedule schedule = StepSchedule::constant(1.0);
  std::size_t K = 1000;
  std::vector<std::uint64_t> seeds;
  Point z0;
  CompactBox box;
  GapMethod gap_method = GapMethod::ClosedForm;
  std::size_t points_per_axis = 201;
  std::optional<GapKind> gap_kind;
  bool raw_iterate_gap = false;
  CheckpointSpec checkpoints;
  /// 0: rows at checkpoints only.
  std::size_t trace_stride = 0;
  BoundKind bound = BoundKind::Auto;
  double slack = 1e-10;
  std::optional<std::pair<double, double>> rate_window;
  std::string output;
};

/// Validates the schema (unknown fields are rejected) and builds the problem.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Built-in small problem: toy_problem(kappa) with B = [-1,1]^2,
/// z0 = (-0.7, 0.9), method at its deterministic step cap.
ExperimentConfig toy_config(Method method, double kappa = 0.01, std::size_t K = 10000);

struct RunSummary {
  std::uint64_t seed = 0;
  std::uint64_t stream_seed = 0;
  std::string method;
  std::string status = "ok";
  std::string error;
  std::size_t iterations = 0;
  std::uint64_t oracle_calls = 0;
  bool z0_in_box = true;
  std::vector<std::string> warnings;
  /// (K, oracle calls, gap of the ergodic average) at each emitted row.
  std::vector<std::size_t> row_K;
  std::vector<std::uint64_t> row_calls;
  std::vector<double> row_gap;
  std::vector<double> row_raw_gap;
  BoundReport bound;
  std::optional<RateFit> rate;
  std::filesystem::path csv;
};

struct ExperimentSummary {
  std::string name;
  std::vector<RunSummary> runs;
  std::size_t total_violations() const;
  bool any_diverged() const;
};

/// One run per seed; CSVs and summary.json go to out_dir when it is
/// non-empty. Seeds of the random streams are derive_seed(master, seed).
ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::uint64_t master_seed,
                                 const std::filesystem::path& out_dir = {});

json to_json(const ExperimentSummary& s);

struct SweepPoint {
  std::size_t K = 0;
  double mean_gap = 0.0;
  double standard_error = 0.0;
  double bound = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  /// Violation: mean > bound + 2 SE + slack.
  BoundReport report;
  std::optional<RateFit> rate;
  std::size_t seeds = 0;
};

/// Mean of the ergodic gap over cfg.seeds at every checkpoint.
SweepResult expectation_sweep(const ExperimentConfig& cfg, std::uint64_t master_seed,
                              const std::filesystem::path& out_dir = {});

json to_json(const SweepResult& s);

struct CompareRow {
  std::string name;
  std::string method;
  std::size_t iterations = 0;
  std::uint64_t oracle_calls = 0;
  double final_gap = 0.0;
  /// Gap at the last checkpoint whose oracle count fits the common budget.
  double gap_at_budget = 0.0;
  std::size_t K_at_budget = 0;
  std::size_t violations = 0;
  std::string status;
};

struct CompareResult {
  std::uint64_t budget = 0;
  std::vector<CompareRow> rows;
  std::vector<ExperimentSummary> runs;
};

/// Runs the first seed of each config. All configs must share problem and box.
CompareResult compare_methods(const std::vector<ExperimentConfig>& cfgs, std::uint64_t master_seed,
                              const std::filesystem::path& out_dir = {});

std::string format_table(const CompareResult& r);
json to_json(const CompareResult& r);

/// Shortest round-trip decimal form (inf / -inf / nan spelled out).
std::string format_double(double v);

}  // namespace fbfkit
