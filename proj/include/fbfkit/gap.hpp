#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Core>

#include "fbfkit/core.hpp"
#include "fbfkit/extended_real.hpp"
#include "fbfkit/solvers.hpp"

namespace fbfkit {

/// minimax: sup_{(x,y) in B} Psi(u, y) - Psi(x, v) with Psi = Phi + f - h.
/// vi:      sup_{z in B} <F(z), w - z> + r(w) - r(z).
enum class GapKind { Minimax, VI };

enum class GapMethod { ClosedForm, Grid };

/// Restricted gap G_B over an auxiliary box B.
///
/// The closed form covers affine F with skew linear part (vi) or bilinear
/// Phi (minimax), both with coordinatewise L1/box regularizers; there the
/// supremum separates into one concave piecewise-linear maximization per
/// coordinate, solved at its breakpoints. Other problems need the grid
/// method, which enumerates a lattice of B (plus z = w when w is in B).
class GapEvaluator {
 public:
  GapEvaluator(ProblemInstance problem, CompactBox box, GapKind kind,
               GapMethod method = GapMethod::ClosedForm, std::size_t points_per_axis = 201);
  /// Kind defaults to minimax when the problem carries a saddle function.
  GapEvaluator(ProblemInstance problem, CompactBox box, GapMethod method = GapMethod::ClosedForm,
               std::size_t points_per_axis = 201);

  static GapKind default_kind(const ProblemInstance& p);

  const ProblemInstance& problem() const noexcept { return problem_; }
  const CompactBox& box() const noexcept { return box_; }
  GapKind kind() const noexcept { return kind_; }
  GapMethod method() const noexcept { return method_; }
  std::size_t points_per_axis() const noexcept { return points_per_axis_; }

  /// The unified gap: minimax or vi according to kind().
  ExtendedReal operator()(const Point& w) const;

 private:
  ProblemInstance problem_;
  CompactBox box_;
  GapKind kind_;
  GapMethod method_;
  std::size_t points_per_axis_;
};

ExtendedReal vi_gap(const GapEvaluator& e, const Point& w);
ExtendedReal minimax_gap(const GapEvaluator& e, const Point& w);

/// Exact closed forms. Throw CapabilityError outside their problem class.
ExtendedReal vi_gap_closed_form(const ProblemInstance& p, const CompactBox& B, const Point& w);
ExtendedReal minimax_gap_closed_form(const ProblemInstance& p, const CompactBox& B,
                                     const Point& w);

/// g(w, z) = <F(w), w - z> + r(w) - r(z).
ExtendedReal g_value(const ProblemInstance& p, const Point& w, const Point& z);

/// Raw maximum of the gap integrand over the regular lattice with
/// points_per_axis points per axis (corners included), without adding z = w
/// and without clamping. Requires m <= 3.
ExtendedReal grid_gap_oracle(const ProblemInstance& p, const CompactBox& B, const Point& w,
                             std::size_t points_per_axis, GapKind kind);

/// Gap integrand at a single z.
ExtendedReal gap_integrand(const ProblemInstance& p, GapKind kind, const Point& w,
                           const Point& z);

/// Running form of sup_{z in B} (sum_k a_k g(w_k, z)) / (sum_k a_k), which
/// dominates G_B of the ergodic average. Uses exact F(w_k).
class ErgodicGBound {
 public:
  ErgodicGBound(ProblemInstance problem, CompactBox box);

  void add(const Point& w, double alpha);
  /// Average of g(w_k, z) at a given z.
  ExtendedReal average_at(const Point& z) const;
  /// Supremum over B (closed form per coordinate; needs a separable r).
  ExtendedReal supremum() const;

 private:
  ProblemInstance problem_;
  CompactBox box_;
  Eigen::VectorXd sum_F_;
  double sum_const_ = 0.0;
  double sum_alpha_ = 0.0;
  bool infinite_ = false;
};

ExtendedReal ergodic_g_sup(const ProblemInstance& p, const CompactBox& B,
                           std::span<const Point> iterates, std::span<const double> alphas);

}  // namespace fbfkit
