#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fbfkit/core.hpp"
#include "fbfkit/extended_real.hpp"

namespace fbfkit {

/// One coordinate of a separable regularizer:
/// phi(t) = kappa * |t| + indicator of [lo, hi].
struct CoordinatePiece {
  double kappa = 0.0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

/// Proper convex lower-semicontinuous r : R^m -> R ∪ {+inf} with a
/// closed-form proximal map
///   prox_{lambda r}(w) = argmin_u r(u) + ||u - w||^2 / (2 lambda).
class Regularizer {
 public:
  virtual ~Regularizer() = default;

  /// Fixed dimension, or nullopt if the regularizer applies to any R^m.
  virtual std::optional<std::size_t> dimension() const = 0;
  virtual ExtendedReal value(const Point& w) const = 0;
  /// Throws ParameterError for lambda <= 0, DimensionError on mismatch.
  Point prox(double lambda, const Point& w) const;
  /// Coordinatewise decomposition on R^m, if r is separable of that form.
  virtual std::optional<std::vector<CoordinatePiece>> coordinate_pieces(std::size_t m) const {
    (void)m;
    return std::nullopt;
  }
  virtual std::string name() const = 0;

 protected:
  virtual Point prox_impl(double lambda, const Point& w) const = 0;
  void check_dimension(const Point& w) const;
};

class ZeroRegularizer final : public Regularizer {
 public:
  std::optional<std::size_t> dimension() const override { return std::nullopt; }
  ExtendedReal value(const Point&) const override { return 0.0; }
  std::optional<std::vector<CoordinatePiece>> coordinate_pieces(std::size_t m) const override;
  std::string name() const override { return "zero"; }

 protected:
  Point prox_impl(double, const Point& w) const override { return w; }
};

/// kappa * ||w||_1; prox is soft-thresholding by lambda * kappa.
class L1Regularizer final : public Regularizer {
 public:
  explicit L1Regularizer(double kappa);

  double kappa() const noexcept { return kappa_; }
  std::optional<std::size_t> dimension() const override { return std::nullopt; }
  ExtendedReal value(const Point& w) const override;
  std::optional<std::vector<CoordinatePiece>> coordinate_pieces(std::size_t m) const override;
  std::string name() const override { return "l1"; }

 protected:
  Point prox_impl(double lambda, const Point& w) const override;

 private:
  double kappa_;
};

/// Indicator of a box; prox is the coordinatewise clamp for every lambda.
class BoxIndicator final : public Regularizer {
 public:
  explicit BoxIndicator(CompactBox box) : box_(std::move(box)) {}

  const CompactBox& box() const noexcept { return box_; }
  std::optional<std::size_t> dimension() const override { return box_.dimension(); }
  ExtendedReal value(const Point& w) const override;
  std::optional<std::vector<CoordinatePiece>> coordinate_pieces(std::size_t m) const override;
  std::string name() const override { return "box"; }

 protected:
  Point prox_impl(double, const Point& w) const override { return box_.clamp(w); }

 private:
  CompactBox box_;
};

/// r(x, y) = f(x) + h(y) over a primal/dual split; prox acts blockwise.
class SeparableSum final : public Regularizer {
 public:
  SeparableSum(std::shared_ptr<const Regularizer> f, std::shared_ptr<const Regularizer> h,
               SaddleSplit split);

  const Regularizer& f() const noexcept { return *f_; }
  const Regularizer& h() const noexcept { return *h_; }
  const SaddleSplit& split() const noexcept { return split_; }
  std::optional<std::size_t> dimension() const override { return split_.m(); }
  ExtendedReal value(const Point& w) const override;
  std::optional<std::vector<CoordinatePiece>> coordinate_pieces(std::size_t m) const override;
  std::string name() const override { return "separable"; }

 protected:
  Point prox_impl(double lambda, const Point& w) const override;

 private:
  std::shared_ptr<const Regularizer> f_;
  std::shared_ptr<const Regularizer> h_;
  SaddleSplit split_;
};

inline Point prox(const Regularizer& r, double lambda, const Point& w) {
  return r.prox(lambda, w);
}
inline ExtendedReal value(const Regularizer& r, const Point& w) { return r.value(w); }

/// Checks that `candidate` minimizes r(u) + ||u - w||^2 / (2 lambda) against
/// `trials` random competitors at several distance scales (1e-12 slack).
bool prox_residual_check(const Regularizer& r, double lambda, const Point& w,
                         const Point& candidate, int trials, std::uint64_t seed = 0x9a7);

}  // namespace fbfkit
