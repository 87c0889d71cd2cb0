#include "fbfkit/gap.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace fbfkit {

namespace {

/// sup of g*t - kappa*|t| over [a, b] ∩ [lo, hi]; nullopt if empty.
/// The objective is concave piecewise linear, so its maximum sits on an
/// endpoint or on the kink at 0.
std::optional<double> coordinate_sup(double g, const CoordinatePiece& piece, double a, double b) {
  const double left = std::max(a, piece.lo);
  const double right = std::min(b, piece.hi);
  if (left > right) return std::nullopt;
  auto f = [&](double t) { return g * t - piece.kappa * std::abs(t); };
  double best = std::max(f(left), f(right));
  if (left < 0.0 && 0.0 < right) best = std::max(best, f(0.0));
  return best;
}

/// sup_{z in B ∩ dom r} <coef, z> - r(z) for a separable r.
ExtendedReal separable_sup(const Eigen::VectorXd& coef, const std::vector<CoordinatePiece>& pieces,
                           const CompactBox& B) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < coef.size(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto s = coordinate_sup(coef[i], pieces[ui], B.lower()[ui], B.upper()[ui]);
    if (!s) return ExtendedReal::neg_inf();
    total += *s;
  }
  return total;
}

std::vector<CoordinatePiece> require_pieces(const ProblemInstance& p) {
  auto pieces = p.r->coordinate_pieces(p.dimension());
  if (!pieces) {
    throw CapabilityError("closed-form gap needs a coordinatewise separable regularizer");
  }
  return *pieces;
}

void require_box_dimension(const ProblemInstance& p, const CompactBox& B) {
  if (B.dimension() != p.dimension()) throw DimensionError("box does not match problem dimension");
}

}  // namespace

GapEvaluator::GapEvaluator(ProblemInstance problem, CompactBox box, GapKind kind,
                           GapMethod method, std::size_t points_per_axis)
    : problem_(std::move(problem)),
      box_(std::move(box)),
      kind_(kind),
      method_(method),
      points_per_axis_(points_per_axis) {
  require_box_dimension(problem_, box_);
  if (kind_ == GapKind::Minimax) {
    if (!problem_.split) throw ConfigError("minimax gap requires a saddle split");
    const Point zero_x = Point::zeros(problem_.split->d);
    const Point zero_y = Point::zeros(problem_.split->n);
    if (!problem_.F->saddle_value(zero_x, zero_y)) {
      throw ConfigError("minimax gap requires a saddle-function value oracle");
    }
  }
  if (method_ == GapMethod::Grid && points_per_axis_ < 2) {
    throw ParameterError("grid gap needs at least 2 points per axis");
  }
}

GapEvaluator::GapEvaluator(ProblemInstance problem, CompactBox box, GapMethod method,
                           std::size_t points_per_axis)
    : GapEvaluator(problem, std::move(box), default_kind(problem), method, points_per_axis) {}

GapKind GapEvaluator::default_kind(const ProblemInstance& p) {
  if (p.split && p.split == p.F->split() &&
      p.F->saddle_value(Point::zeros(p.split->d), Point::zeros(p.split->n))) {
    return GapKind::Minimax;
  }
  return GapKind::VI;
}

ExtendedReal GapEvaluator::operator()(const Point& w) const {
  return kind_ == GapKind::Minimax ? minimax_gap(*this, w) : vi_gap(*this, w);
}

namespace {

ExtendedReal grid_gap(const GapEvaluator& e, GapKind kind, const Point& w) {
  ExtendedReal best =
      grid_gap_oracle(e.problem(), e.box(), w, e.points_per_axis(), kind);
  if (e.box().contains(w)) best = max(best, gap_integrand(e.problem(), kind, w, w));
  return best;
}

}  // namespace

ExtendedReal vi_gap(const GapEvaluator& e, const Point& w) {
  if (e.method() == GapMethod::Grid) return grid_gap(e, GapKind::VI, w);
  return vi_gap_closed_form(e.problem(), e.box(), w);
}

ExtendedReal minimax_gap(const GapEvaluator& e, const Point& w) {
  if (e.method() == GapMethod::Grid) return grid_gap(e, GapKind::Minimax, w);
  return minimax_gap_closed_form(e.problem(), e.box(), w);
}

ExtendedReal vi_gap_closed_form(const ProblemInstance& p, const CompactBox& B, const Point& w) {
  require_box_dimension(p, B);
  if (w.size() != p.dimension()) throw DimensionError("vi gap: point dimension mismatch");
  const auto form = p.F->affine_form();
  if (!form) throw CapabilityError("closed-form vi gap needs an affine operator");
  const Eigen::MatrixXd& M = form->M;
  if ((M + M.transpose()).norm() > 1e-12 * (1.0 + M.norm())) {
    throw CapabilityError("closed-form vi gap needs a skew-symmetric linear part");
  }
  const auto pieces = require_pieces(p);
  const ExtendedReal rw = p.r->value(w);
  if (rw.is_pos_inf()) return ExtendedReal::pos_inf();

  // With M skew, <Mz + q, w - z> = <M^T w - q, z> + <q, w>.
  const Eigen::VectorXd coef = M.transpose() * w.vec() - form->q;
  return ExtendedReal(form->q.dot(w.vec())) + rw + separable_sup(coef, pieces, B);
}

ExtendedReal minimax_gap_closed_form(const ProblemInstance& p, const CompactBox& B,
                                     const Point& w) {
  require_box_dimension(p, B);
  if (w.size() != p.dimension()) throw DimensionError("minimax gap: point dimension mismatch");
  const auto* bilinear = dynamic_cast<const BilinearSaddleOperator*>(p.F.get());
  if (bilinear == nullptr || !p.split || *p.split != *bilinear->split()) {
    throw CapabilityError("closed-form minimax gap needs a bilinear saddle operator");
  }
  const auto pieces = require_pieces(p);
  const ExtendedReal rw = p.r->value(w);
  if (rw.is_pos_inf()) return ExtendedReal::pos_inf();

  const auto d = static_cast<Eigen::Index>(p.split->d);
  const auto n = static_cast<Eigen::Index>(p.split->n);
  const Eigen::VectorXd u = w.vec().head(d);
  const Eigen::VectorXd v = w.vec().tail(n);
  const Eigen::MatrixXd& A = bilinear->A();
  const Eigen::VectorXd& b = bilinear->b();
  const Eigen::VectorXd& c = bilinear->c();

  // Psi(u,y) - Psi(x,v) = b.u + c.v + f(u) + h(v)
  //                       + [-(A v + b).x - f(x)] + [(A^T u - c).y - h(y)]
  Eigen::VectorXd coef(d + n);
  coef.head(d) = -(A * v + b);
  coef.tail(n) = A.transpose() * u - c;
  return ExtendedReal(b.dot(u) + c.dot(v)) + rw + separable_sup(coef, pieces, B);
}

ExtendedReal g_value(const ProblemInstance& p, const Point& w, const Point& z) {
  const Point Fw = p.F->eval(w);
  return ExtendedReal(dot(Fw, w - z)) + (p.r->value(w) - p.r->value(z));
}

ExtendedReal gap_integrand(const ProblemInstance& p, GapKind kind, const Point& w,
                           const Point& z) {
  const ExtendedReal reg = p.r->value(w) - p.r->value(z);
  if (kind == GapKind::VI) return ExtendedReal(dot(p.F->eval(z), w - z)) + reg;
  if (!p.split) throw ConfigError("minimax integrand requires a saddle split");
  const Point u = p.split->primal(w);
  const Point v = p.split->dual(w);
  const Point x = p.split->primal(z);
  const Point y = p.split->dual(z);
  const auto phi_uy = p.F->saddle_value(u, y);
  const auto phi_xv = p.F->saddle_value(x, v);
  if (!phi_uy || !phi_xv) throw ConfigError("minimax integrand requires saddle values");
  // f(u) - h(y) - f(x) + h(v) = r(w) - r(z) for r = f ⊕ h.
  return ExtendedReal(*phi_uy - *phi_xv) + reg;
}

ExtendedReal grid_gap_oracle(const ProblemInstance& p, const CompactBox& B, const Point& w,
                             std::size_t points_per_axis, GapKind kind) {
  require_box_dimension(p, B);
  const std::size_t m = p.dimension();
  if (m > 3) throw CapabilityError("grid gap oracle supports m <= 3 only");
  if (points_per_axis < 2) throw ParameterError("grid gap needs at least 2 points per axis");
  double total = 1.0;
  for (std::size_t i = 0; i < m; ++i) total *= static_cast<double>(points_per_axis);
  if (total > 2e8) throw CapabilityError("grid gap lattice too large");

  std::vector<std::vector<double>> axes(m);
  for (std::size_t i = 0; i < m; ++i) {
    axes[i].resize(points_per_axis);
    const double lo = B.lower()[i];
    const double hi = B.upper()[i];
    for (std::size_t j = 0; j < points_per_axis; ++j) {
      axes[i][j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(points_per_axis - 1);
    }
    axes[i].back() = hi;
  }

  ExtendedReal best = ExtendedReal::neg_inf();
  std::vector<std::size_t> idx(m, 0);
  Eigen::VectorXd z(static_cast<Eigen::Index>(m));
  while (true) {
    for (std::size_t i = 0; i < m; ++i) z[static_cast<Eigen::Index>(i)] = axes[i][idx[i]];
    best = max(best, gap_integrand(p, kind, w, Point(z)));
    std::size_t axis = 0;
    while (axis < m && ++idx[axis] == points_per_axis) idx[axis++] = 0;
    if (axis == m) break;
  }
  return best;
}

ErgodicGBound::ErgodicGBound(ProblemInstance problem, CompactBox box)
    : problem_(std::move(problem)),
      box_(std::move(box)),
      sum_F_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem_.dimension()))) {
  require_box_dimension(problem_, box_);
}

void ErgodicGBound::add(const Point& w, double alpha) {
  const Point Fw = problem_.F->eval(w);
  const ExtendedReal rw = problem_.r->value(w);
  sum_F_ += alpha * Fw.vec();
  sum_alpha_ += alpha;
  if (rw.is_pos_inf()) {
    infinite_ = true;
    return;
  }
  sum_const_ += alpha * (Fw.vec().dot(w.vec()) + rw.value());
}

ExtendedReal ErgodicGBound::average_at(const Point& z) const {
  if (sum_alpha_ <= 0.0) throw ParameterError("no iterates accumulated");
  if (infinite_) return ExtendedReal::pos_inf();
  // g averaged over k: C - <Fbar, z> - r(z).
  const double linear = (sum_const_ - sum_F_.dot(z.vec())) / sum_alpha_;
  return ExtendedReal(linear) - problem_.r->value(z);
}

ExtendedReal ErgodicGBound::supremum() const {
  if (sum_alpha_ <= 0.0) throw ParameterError("no iterates accumulated");
  if (infinite_) return ExtendedReal::pos_inf();
  const auto pieces = require_pieces(problem_);
  const Eigen::VectorXd coef = -sum_F_ / sum_alpha_;
  return ExtendedReal(sum_const_ / sum_alpha_) + separable_sup(coef, pieces, box_);
}

ExtendedReal ergodic_g_sup(const ProblemInstance& p, const CompactBox& B,
                           std::span<const Point> iterates, std::span<const double> alphas) {
  if (iterates.size() != alphas.size() || iterates.empty()) {
    throw DimensionError("ergodic bound needs matching, non-empty iterates and steps");
  }
  ErgodicGBound acc(p, B);
  for (std::size_t k = 0; k < iterates.size(); ++k) acc.add(iterates[k], alphas[k]);
  return acc.supremum();
}

}  // namespace fbfkit
