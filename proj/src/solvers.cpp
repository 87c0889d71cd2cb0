#include "fbfkit/solvers.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace fbfkit {

namespace {

/// Forwards to another oracle and counts evaluations.
class CountingOracle final : public OperatorOracle {
 public:
  explicit CountingOracle(std::shared_ptr<const OperatorOracle> base) : base_(std::move(base)) {}

  std::size_t dimension() const override { return base_->dimension(); }
  double lipschitz() const override { return base_->lipschitz(); }
  std::optional<SaddleSplit> split() const override { return base_->split(); }
  std::optional<double> saddle_value(const Point& x, const Point& y) const override {
    return base_->saddle_value(x, y);
  }
  std::optional<AffineForm> affine_form() const override { return base_->affine_form(); }
  std::uint64_t calls() const noexcept { return calls_; }

 protected:
  Eigen::VectorXd apply(const Eigen::VectorXd& w) const override {
    ++calls_;
    return base_->eval(Point(w)).vec();
  }

 private:
  std::shared_ptr<const OperatorOracle> base_;
  mutable std::uint64_t calls_ = 0;
};

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ParameterError("step size must be positive and finite");
  }
}

Point finite_or_diverge(Eigen::VectorXd v, const Point& last) {
  if (!v.allFinite()) {
    throw DivergenceError("non-finite iterate", 0, last.to_vector());
  }
  return Point(std::move(v));
}

/// prox_{a r}(v) with an overflow check on the forward step.
Point forward_prox(const ProblemInstance& p, double alpha, Eigen::VectorXd arg, const Point& last) {
  return p.r->prox(alpha, finite_or_diverge(std::move(arg), last));
}

void require_blockwise_prox(const ProblemInstance& p) {
  if (!p.split) throw ConfigError("PGDA requires a saddle split");
  if (dynamic_cast<const SeparableSum*>(p.r.get()) == nullptr &&
      !p.r->coordinate_pieces(p.dimension())) {
    throw ConfigError("PGDA requires a regularizer that is separable across the split");
  }
}

}  // namespace

ProblemInstance::ProblemInstance(std::shared_ptr<const OperatorOracle> op,
                                 std::shared_ptr<const Regularizer> reg, double noise,
                                 std::string name)
    : ProblemInstance(op, std::move(reg), op ? op->split() : std::nullopt, noise,
                      std::move(name)) {}

ProblemInstance::ProblemInstance(std::shared_ptr<const OperatorOracle> op,
                                 std::shared_ptr<const Regularizer> reg,
                                 std::optional<SaddleSplit> saddle, double noise,
                                 std::string name)
    : F(std::move(op)), r(std::move(reg)), split(saddle), sigma(noise), id(std::move(name)) {
  if (!F || !r) throw ParameterError("problem needs an operator and a regularizer");
  L = F->lipschitz();
  const auto m = F->dimension();
  if (r->dimension() && *r->dimension() != m) {
    throw DimensionError("regularizer and operator dimensions differ");
  }
  if (split && split->m() != m) throw DimensionError("split does not match operator dimension");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("sigma must be >= 0");
}

ProblemInstance toy_problem(double kappa, double sigma) {
  Eigen::MatrixXd A(1, 1);
  A(0, 0) = 1.0;
  auto F = std::make_shared<BilinearSaddleOperator>(A, 1.0);
  auto f = std::make_shared<L1Regularizer>(kappa);
  auto h = std::make_shared<BoxIndicator>(CompactBox(Point{-1.0}, Point{1.0}));
  auto r = std::make_shared<SeparableSum>(f, h, SaddleSplit(1, 1));
  std::ostringstream id;
  id << "toy(kappa=" << kappa << ")";
  return ProblemInstance(F, r, sigma, id.str());
}

StepSchedule::StepSchedule(Variant v, double alpha) : variant_(v), alpha_(alpha) {
  check_alpha(alpha);
}

double StepSchedule::at(std::size_t k) const {
  switch (variant_) {
    case Variant::Constant:
      return alpha_;
    case Variant::InverseSqrt:
      return alpha_ / std::sqrt(static_cast<double>(k) + 1.0);
  }
  return alpha_;
}

void SolverKind::validate() const {
  if (mode == Mode::Stochastic && (method == Method::PGDA || method == Method::EGp)) {
    throw ConfigError(to_string(method) + " has no stochastic mode");
  }
}

std::string to_string(Method m) {
  switch (m) {
    case Method::FBF:
      return "fbf";
    case Method::FBFp:
      return "fbfp";
    case Method::EG:
      return "eg";
    case Method::EGp:
      return "egp";
    case Method::PGDA:
      return "pgda";
  }
  return "?";
}

std::string to_string(Mode m) {
  return m == Mode::Deterministic ? "deterministic" : "stochastic";
}

Method method_from_string(const std::string& s) {
  for (Method m : {Method::FBF, Method::FBFp, Method::EG, Method::EGp, Method::PGDA}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown method '" + s + "'");
}

std::optional<double> step_cap(const SolverKind& kind, double L) {
  if (kind.mode == Mode::Deterministic) {
    switch (kind.method) {
      case Method::FBF:
      case Method::EG:
        return 1.0 / L;
      case Method::FBFp:
      case Method::EGp:
        return 1.0 / (2.0 * L);
      case Method::PGDA:
        return std::nullopt;
    }
  }
  const bool refined = kind.regime == StepRegime::Refined;
  switch (kind.method) {
    case Method::FBF:
      return refined ? 1.0 / L : 1.0 / (std::numbers::sqrt2 * L);
    case Method::FBFp:
      return refined ? 1.0 / (2.0 * std::numbers::sqrt2 * L) : 1.0 / (3.0 * L);
    default:
      return std::nullopt;
  }
}

bool step_cap_is_strict(const SolverKind& kind) {
  return kind.mode == Mode::Stochastic && kind.regime == StepRegime::Refined;
}

StepResult fbf_step(const ProblemInstance& p, const Point& z, double alpha) {
  check_alpha(alpha);
  const Point Fz = p.F->eval(z);
  Point w = forward_prox(p, alpha, z.vec() - alpha * Fz.vec(), z);
  const Point Fw = p.F->eval(w);
  Point z_next = finite_or_diverge(w.vec() + alpha * (Fz.vec() - Fw.vec()), z);
  return {std::move(w), std::move(z_next)};
}

RecyclingStepResult fbfp_step(const ProblemInstance& p, const Point& z, const Point& w_prev,
                              const Point& F_w_prev, double alpha) {
  check_alpha(alpha);
  require_same_size(z, w_prev, "fbfp_step");
  require_same_size(z, F_w_prev, "fbfp_step");
  Point w = forward_prox(p, alpha, z.vec() - alpha * F_w_prev.vec(), z);
  Point Fw = p.F->eval(w);
  Point z_next = finite_or_diverge(w.vec() + alpha * (F_w_prev.vec() - Fw.vec()), z);
  return {std::move(w), std::move(z_next), std::move(Fw)};
}

Point reflected_step(const ProblemInstance& p, const Point& w, const Point& F_w,
                     const Point& F_w_prev, double alpha, double alpha_next) {
  check_alpha(alpha);
  check_alpha(alpha_next);
  require_same_size(w, F_w, "reflected_step");
  require_same_size(w, F_w_prev, "reflected_step");
  Eigen::VectorXd arg = w.vec() - alpha_next * F_w.vec() + alpha * (F_w_prev.vec() - F_w.vec());
  return forward_prox(p, alpha_next, std::move(arg), w);
}

StepResult eg_step(const ProblemInstance& p, const Point& z, double alpha) {
  check_alpha(alpha);
  const Point Fz = p.F->eval(z);
  Point w = forward_prox(p, alpha, z.vec() - alpha * Fz.vec(), z);
  const Point Fw = p.F->eval(w);
  Point z_next = forward_prox(p, alpha, z.vec() - alpha * Fw.vec(), z);
  return {std::move(w), std::move(z_next)};
}

RecyclingStepResult egp_step(const ProblemInstance& p, const Point& z, const Point& w_prev,
                             const Point& F_w_prev, double alpha) {
  check_alpha(alpha);
  require_same_size(z, w_prev, "egp_step");
  require_same_size(z, F_w_prev, "egp_step");
  Point w = forward_prox(p, alpha, z.vec() - alpha * F_w_prev.vec(), z);
  Point Fw = p.F->eval(w);
  Point z_next = forward_prox(p, alpha, z.vec() - alpha * Fw.vec(), z);
  return {std::move(w), std::move(z_next), std::move(Fw)};
}

BlockPoint pgda_step(const ProblemInstance& p, const Point& x, const Point& y, double alpha,
                     PgdaVariant variant) {
  check_alpha(alpha);
  require_blockwise_prox(p);
  const SaddleSplit& s = *p.split;
  if (x.size() != s.d || y.size() != s.n) throw DimensionError("pgda_step: block mismatch");
  const Point z = concat(x, y);
  const auto d = static_cast<Eigen::Index>(s.d);
  const auto n = static_cast<Eigen::Index>(s.n);

  // The regularizer is separable across the split, so the primal block of
  // prox(x_arg, y) is prox_f(x_arg) and likewise for the dual block.
  const Point F_old = p.F->eval(z);
  Eigen::VectorXd arg(d + n);
  arg << x.vec() - alpha * F_old.vec().head(d), y.vec();
  Point x_next = s.primal(forward_prox(p, alpha, std::move(arg), z));

  const Point F_dual = variant == PgdaVariant::Alternating ? p.F->eval(concat(x_next, y)) : F_old;
  // y ascends along grad_y Phi = -F_y.
  arg.resize(d + n);
  arg << x_next.vec(), y.vec() - alpha * F_dual.vec().tail(n);
  Point y_next = s.dual(forward_prox(p, alpha, std::move(arg), z));
  return {std::move(x_next), std::move(y_next)};
}

StochasticStepResult stochastic_step(const SolverKind& kind, const ProblemInstance& p,
                                     StochasticOracle& oracle, const StochasticState& state,
                                     double alpha) {
  check_alpha(alpha);
  kind.validate();
  const Point& z = state.z;
  StochasticState next;
  next.k = state.k + 1;
  switch (kind.method) {
    case Method::FBF: {
      const Point Fz = oracle.eval(z);  // eta_k
      Point w = forward_prox(p, alpha, z.vec() - alpha * Fz.vec(), z);
      const Point Fw = oracle.eval(w);  // xi_k
      next.z = finite_or_diverge(w.vec() + alpha * (Fz.vec() - Fw.vec()), z);
      return {std::move(w), std::move(next)};
    }
    case Method::FBFp: {
      // w_{-1} = z_0 and xi_{-1} = eta_0: the first recycled value is one
      // fresh sample at z_0.
      const Point F_prev = state.F_prev ? *state.F_prev : oracle.eval(z);
      Point w = forward_prox(p, alpha, z.vec() - alpha * F_prev.vec(), z);
      Point Fw = oracle.eval(w);
      next.z = finite_or_diverge(w.vec() + alpha * (F_prev.vec() - Fw.vec()), z);
      next.w_prev = w;
      next.F_prev = std::move(Fw);
      return {std::move(w), std::move(next)};
    }
    case Method::EG: {
      const Point Fz = oracle.eval(z);
      Point w = forward_prox(p, alpha, z.vec() - alpha * Fz.vec(), z);
      const Point Fw = oracle.eval(w);
      next.z = forward_prox(p, alpha, z.vec() - alpha * Fw.vec(), z);
      return {std::move(w), std::move(next)};
    }
    default:
      throw ConfigError(to_string(kind.method) + " has no stochastic mode");
  }
}

SolverTrace run(const SolverKind& kind, const ProblemInstance& p, const Point& z0,
                const StepSchedule& schedule, std::size_t K, std::uint64_t seed,
                const RunOptions& options) {
  kind.validate();
  if (z0.size() != p.dimension()) throw DimensionError("z0 does not match problem dimension");
  if (kind.method == Method::PGDA) require_blockwise_prox(p);

  SolverTrace trace;
  trace.metadata.seed = seed;
  trace.metadata.kind = kind;
  trace.metadata.schedule = schedule;
  trace.metadata.problem_id = p.id;
  trace.metadata.iterations = K;

  if (auto cap = step_cap(kind, p.L)) {
    const bool strict = step_cap_is_strict(kind);
    const bool exceeded = strict ? schedule.alpha() >= *cap
                                 : schedule.alpha() > *cap * (1.0 + 1e-12);
    if (exceeded) {
      std::ostringstream msg;
      msg << "step size " << schedule.alpha() << (strict ? " >= " : " > ") << "theoretical cap "
          << *cap << " for " << to_string(kind.method);
      if (kind.mode == Mode::Stochastic) throw ConfigError(msg.str());
      trace.metadata.step_cap_exceeded = true;
      trace.metadata.warnings.push_back(msg.str());
    }
  } else if (kind.mode == Mode::Stochastic) {
    trace.metadata.warnings.push_back("no convergence theorem covers stochastic " +
                                      to_string(kind.method));
  }

  std::vector<char> keep(K + 1, 0);
  if (options.stride > 0) {
    for (std::size_t i = options.stride; i <= K; i += options.stride) keep[i] = 1;
  }
  for (std::size_t c : options.checkpoints) {
    if (c >= 1 && c <= K) keep[c] = 1;
  }
  if (K > 0) keep[K] = 1;

  auto counter = std::make_shared<CountingOracle>(p.F);
  const ProblemInstance counted(counter, p.r, p.split, p.sigma, p.id);
  std::optional<StochasticOracle> noisy;
  if (kind.mode == Mode::Stochastic) noisy.emplace(p.F, p.sigma, RngStream(seed));

  Eigen::VectorXd sum_w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(z0.size()));
  Point z = z0;
  std::optional<Point> w_prev;
  std::optional<Point> F_prev;
  StochasticState sstate{z0, std::nullopt, std::nullopt, 0};

  std::size_t k = 0;
  try {
    for (; k < K; ++k) {
      const double alpha = schedule.at(k);
      Point w;
      Point z_next;
      if (noisy) {
        auto res = stochastic_step(kind, p, *noisy, sstate, alpha);
        w = std::move(res.w);
        sstate = std::move(res.next);
        z_next = sstate.z;
      } else {
        switch (kind.method) {
          case Method::FBF: {
            auto res = fbf_step(counted, z, alpha);
            w = std::move(res.w);
            z_next = std::move(res.z_next);
            break;
          }
          case Method::EG: {
            auto res = eg_step(counted, z, alpha);
            w = std::move(res.w);
            z_next = std::move(res.z_next);
            break;
          }
          case Method::FBFp:
          case Method::EGp: {
            if (!w_prev) {
              w_prev = z0;
              F_prev = counted.F->eval(z0);
            }
            auto res = kind.method == Method::FBFp ? fbfp_step(counted, z, *w_prev, *F_prev, alpha)
                                                   : egp_step(counted, z, *w_prev, *F_prev, alpha);
            w = std::move(res.w);
            z_next = std::move(res.z_next);
            w_prev = w;
            F_prev = std::move(res.F_w);
            break;
          }
          case Method::PGDA: {
            auto res = pgda_step(counted, p.split->primal(z), p.split->dual(z), alpha, kind.pgda);
            z_next = concat(res.x, res.y);
            w = z_next;
            break;
          }
        }
      }

      sum_w += alpha * w.vec();
      trace.sum_alpha += alpha;
      trace.sum_alpha_sq += alpha * alpha;
      const std::uint64_t calls = noisy ? noisy->calls() : counter->calls();

      if (keep[k + 1]) {
        TraceRecord rec{k,     z,     w, alpha, Point(Eigen::VectorXd(sum_w / trace.sum_alpha)),
                        calls, trace.sum_alpha, trace.sum_alpha_sq};
        if (options.on_record) options.on_record(rec);
        trace.records.push_back(std::move(rec));
      }
      trace.oracle_calls = calls;
      z = std::move(z_next);
    }
  } catch (const DivergenceError& e) {
    throw DivergenceError("iteration " + std::to_string(k) + ": " + e.what(), k, e.last_state());
  } catch (const NonFiniteError& e) {
    throw DivergenceError("iteration " + std::to_string(k) + ": " + e.what(), k, z.to_vector());
  }
  if (K > 0) trace.final_wbar = Point(Eigen::VectorXd(sum_w / trace.sum_alpha));
  return trace;
}

}  // namespace fbfkit
