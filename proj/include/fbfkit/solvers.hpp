#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fbfkit/core.hpp"
#include "fbfkit/operators.hpp"
#include "fbfkit/regularizers.hpp"

namespace fbfkit {

/// The inclusion 0 ∈ F(w) + ∂r(w), optionally carrying the saddle split of
/// the minimax problem F was derived from and the noise level used when the
/// problem is solved in stochastic mode.
struct ProblemInstance {
  std::shared_ptr<const OperatorOracle> F;
  std::shared_ptr<const Regularizer> r;
  double L = 0.0;
  std::optional<SaddleSplit> split;
  double sigma = 0.0;
  std::string id;

  /// L is taken from F; split defaults to F->split().
  ProblemInstance(std::shared_ptr<const OperatorOracle> op,
                  std::shared_ptr<const Regularizer> reg, double noise = 0.0,
                  std::string name = {});
  ProblemInstance(std::shared_ptr<const OperatorOracle> op,
                  std::shared_ptr<const Regularizer> reg, std::optional<SaddleSplit> saddle,
                  double noise, std::string name);

  std::size_t dimension() const { return F->dimension(); }
};

/// min_x max_{y in [-1,1]} kappa |x| + x y  (L = 1, saddle point (0, 0)).
ProblemInstance toy_problem(double kappa = 0.01, double sigma = 0.0);

class StepSchedule {
 public:
  enum class Variant { Constant, InverseSqrt };

  static StepSchedule constant(double alpha) { return {Variant::Constant, alpha}; }
  /// alpha_k = alpha / sqrt(k + 1)
  static StepSchedule inverse_sqrt(double alpha) { return {Variant::InverseSqrt, alpha}; }

  Variant variant() const noexcept { return variant_; }
  /// Upper bound of every alpha_k.
  double alpha() const noexcept { return alpha_; }
  double at(std::size_t k) const;

 private:
  StepSchedule(Variant v, double alpha);

  Variant variant_;
  double alpha_;
};

enum class Method { FBF, FBFp, EG, EGp, PGDA };
enum class Mode { Deterministic, Stochastic };
enum class PgdaVariant { Alternating, Simultaneous };
/// Which stochastic step-size theorem a run claims to be in. Standard uses
/// 1/(sqrt2 L) for FBF and 1/(3L) for FBFp; Refined allows alpha < 1/L and
/// alpha < 1/(2 sqrt2 L) respectively.
enum class StepRegime { Standard, Refined };

struct SolverKind {
  Method method = Method::FBF;
  Mode mode = Mode::Deterministic;
  PgdaVariant pgda = PgdaVariant::Alternating;
  StepRegime regime = StepRegime::Standard;

  /// Throws ConfigError for combinations this library does not provide.
  void validate() const;
};

std::string to_string(Method m);
std::string to_string(Mode m);
Method method_from_string(const std::string& s);

/// Largest step size covered by the convergence theorems for this kind,
/// or nullopt when none applies (PGDA, stochastic EG/EGp).
std::optional<double> step_cap(const SolverKind& kind, double L);
/// Whether the cap is strict (alpha < cap) rather than alpha <= cap.
bool step_cap_is_strict(const SolverKind& kind);

struct StepResult {
  Point w;
  Point z_next;
};

struct RecyclingStepResult {
  Point w;
  Point z_next;
  Point F_w;
};

struct BlockPoint {
  Point x;
  Point y;
};

/// w = prox(z - a F(z)); z' = w + a (F(z) - F(w)).
StepResult fbf_step(const ProblemInstance& p, const Point& z, double alpha);
/// w = prox(z - a F(w_prev)); z' = w + a (F(w_prev) - F(w)). One fresh
/// evaluation, F(w), which is returned for the next call.
RecyclingStepResult fbfp_step(const ProblemInstance& p, const Point& z, const Point& w_prev,
                              const Point& F_w_prev, double alpha);
/// Single-sequence form of FBFp:
/// w_{k+1} = prox_{a_{k+1} r}(w_k - a_{k+1} F(w_k) + a_k (F(w_{k-1}) - F(w_k))).
Point reflected_step(const ProblemInstance& p, const Point& w, const Point& F_w,
                     const Point& F_w_prev, double alpha, double alpha_next);
/// w = prox(z - a F(z)); z' = prox(z - a F(w)).
StepResult eg_step(const ProblemInstance& p, const Point& z, double alpha);
/// w = prox(z - a F(w_prev)); z' = prox(z - a F(w)).
RecyclingStepResult egp_step(const ProblemInstance& p, const Point& z, const Point& w_prev,
                             const Point& F_w_prev, double alpha);
/// Proximal gradient descent on x, ascent on y. The alternating variant
/// evaluates the y-gradient at the new x.
BlockPoint pgda_step(const ProblemInstance& p, const Point& x, const Point& y, double alpha,
                     PgdaVariant variant = PgdaVariant::Alternating);

/// Solver state between stochastic iterations. For FBFp the last estimator
/// value F(w_{k-1}; xi_{k-1}) is kept and reused, never resampled.
struct StochasticState {
  Point z;
  std::optional<Point> w_prev;
  std::optional<Point> F_prev;
  std::size_t k = 0;
};

struct StochasticStepResult {
  Point w;
  StochasticState next;
};

StochasticStepResult stochastic_step(const SolverKind& kind, const ProblemInstance& p,
                                     StochasticOracle& oracle, const StochasticState& state,
                                     double alpha);

struct TraceRecord {
  std::size_t k = 0;
  Point z;
  Point w;
  double alpha = 0.0;
  /// Ergodic average after including w_k.
  Point wbar;
  /// Cumulative oracle calls after iteration k.
  std::uint64_t oracle_calls = 0;
  double sum_alpha = 0.0;
  double sum_alpha_sq = 0.0;
};

struct TraceMetadata {
  std::uint64_t seed = 0;
  SolverKind kind;
  StepSchedule schedule = StepSchedule::constant(1.0);
  std::string problem_id;
  std::size_t iterations = 0;
  bool step_cap_exceeded = false;
  std::vector<std::string> warnings;
};

struct SolverTrace {
  TraceMetadata metadata;
  std::vector<TraceRecord> records;
  Point final_wbar;
  std::uint64_t oracle_calls = 0;
  double sum_alpha = 0.0;
  double sum_alpha_sq = 0.0;
};

struct RunOptions {
  /// Keep every stride-th record (1 keeps all, 0 keeps only checkpoints).
  std::size_t stride = 1;
  /// Iteration counts K' (1-based) at which a record is always kept.
  std::vector<std::size_t> checkpoints;
  /// Called for each kept record as soon as it is produced.
  std::function<void(const TraceRecord&)> on_record;
};

/// Runs K iterations from z0. The ergodic average is the step-weighted mean
/// of w_0..w_{K-1}. DivergenceError is rethrown with the iteration index.
SolverTrace run(const SolverKind& kind, const ProblemInstance& p, const Point& z0,
                const StepSchedule& schedule, std::size_t K, std::uint64_t seed,
                const RunOptions& options = {});

}  // namespace fbfkit
