#include "fbfkit/regularizers.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace fbfkit {

Point Regularizer::prox(double lambda, const Point& w) const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("prox parameter lambda must be positive and finite");
  }
  check_dimension(w);
  return prox_impl(lambda, w);
}

void Regularizer::check_dimension(const Point& w) const {
  const auto dim = dimension();
  if (dim && *dim != w.size()) {
    throw DimensionError(name() + " regularizer expects dimension " + std::to_string(*dim) +
                         ", got " + std::to_string(w.size()));
  }
}

std::optional<std::vector<CoordinatePiece>> ZeroRegularizer::coordinate_pieces(
    std::size_t m) const {
  return std::vector<CoordinatePiece>(m);
}

L1Regularizer::L1Regularizer(double kappa) : kappa_(kappa) {
  if (!(kappa_ >= 0.0) || !std::isfinite(kappa_)) {
    throw ParameterError("L1 weight must be finite and nonnegative");
  }
}

ExtendedReal L1Regularizer::value(const Point& w) const {
  return kappa_ * w.vec().lpNorm<1>();
}

Point L1Regularizer::prox_impl(double lambda, const Point& w) const {
  const double t = lambda * kappa_;
  Eigen::VectorXd out(w.vec().size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double v = w.vec()[i];
    // |v| == t maps to 0.
    out[i] = std::abs(v) <= t ? 0.0 : std::copysign(std::abs(v) - t, v);
  }
  return Point(std::move(out));
}

std::optional<std::vector<CoordinatePiece>> L1Regularizer::coordinate_pieces(std::size_t m) const {
  CoordinatePiece p;
  p.kappa = kappa_;
  return std::vector<CoordinatePiece>(m, p);
}

ExtendedReal BoxIndicator::value(const Point& w) const {
  check_dimension(w);
  return box_.contains(w) ? ExtendedReal(0.0) : ExtendedReal::pos_inf();
}

std::optional<std::vector<CoordinatePiece>> BoxIndicator::coordinate_pieces(std::size_t m) const {
  if (m != box_.dimension()) throw DimensionError("box indicator dimension mismatch");
  std::vector<CoordinatePiece> pieces(m);
  for (std::size_t i = 0; i < m; ++i) {
    pieces[i].lo = box_.lower()[i];
    pieces[i].hi = box_.upper()[i];
  }
  return pieces;
}

SeparableSum::SeparableSum(std::shared_ptr<const Regularizer> f,
                           std::shared_ptr<const Regularizer> h, SaddleSplit split)
    : f_(std::move(f)), h_(std::move(h)), split_(split) {
  if (!f_ || !h_) throw ParameterError("separable sum needs both blocks");
  if (f_->dimension() && *f_->dimension() != split_.d) {
    throw DimensionError("f does not match the primal block dimension");
  }
  if (h_->dimension() && *h_->dimension() != split_.n) {
    throw DimensionError("h does not match the dual block dimension");
  }
}

ExtendedReal SeparableSum::value(const Point& w) const {
  check_dimension(w);
  return f_->value(split_.primal(w)) + h_->value(split_.dual(w));
}

Point SeparableSum::prox_impl(double lambda, const Point& w) const {
  return concat(f_->prox(lambda, split_.primal(w)), h_->prox(lambda, split_.dual(w)));
}

std::optional<std::vector<CoordinatePiece>> SeparableSum::coordinate_pieces(std::size_t m) const {
  if (m != split_.m()) throw DimensionError("separable sum dimension mismatch");
  auto fp = f_->coordinate_pieces(split_.d);
  auto hp = h_->coordinate_pieces(split_.n);
  if (!fp || !hp) return std::nullopt;
  fp->insert(fp->end(), hp->begin(), hp->end());
  return fp;
}

bool prox_residual_check(const Regularizer& r, double lambda, const Point& w,
                         const Point& candidate, int trials, std::uint64_t seed) {
  auto objective = [&](const Point& u) {
    return r.value(u) + ExtendedReal((u - w).vec().squaredNorm() / (2.0 * lambda));
  };
  const ExtendedReal best = objective(candidate);
  if (!best.is_finite()) return false;

  RngStream rng(seed);
  const double base = 1.0 + norm(w);
  constexpr std::array<double, 6> scales = {1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  Eigen::VectorXd step(static_cast<Eigen::Index>(candidate.size()));
  for (int t = 0; t < trials; ++t) {
    const double scale = scales[static_cast<std::size_t>(t) % scales.size()] * base;
    for (Eigen::Index i = 0; i < step.size(); ++i) step[i] = scale * rng.normal();
    const ExtendedReal competitor = objective(Point(Eigen::VectorXd(candidate.vec() + step)));
    if (competitor.is_finite() && best.value() > competitor.value() + 1e-12) return false;
  }
  return true;
}

}  // namespace fbfkit
