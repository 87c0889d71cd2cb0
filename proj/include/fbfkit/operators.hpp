#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include <Eigen/Core>

#include "fbfkit/core.hpp"

namespace fbfkit {

/// Affine structure F(w) = M w + q of an operator.
struct AffineForm {
  Eigen::MatrixXd M;
  Eigen::VectorXd q;
};

/// A single-valued monotone Lipschitz operator F : R^m -> R^m.
///
/// The Lipschitz constant is declared metadata; solvers read it to pick and
/// check step sizes, they never re-estimate it.
class OperatorOracle {
 public:
  virtual ~OperatorOracle() = default;

  virtual std::size_t dimension() const = 0;
  virtual double lipschitz() const = 0;

  /// F(w). Throws DimensionError when dim(w) != dimension().
  Point eval(const Point& w) const;

  /// Primal/dual partition when F is derived from a saddle function.
  virtual std::optional<SaddleSplit> split() const { return std::nullopt; }
  /// Phi(x, y) when F is derived from a saddle function with a known value.
  virtual std::optional<double> saddle_value(const Point& /*x*/, const Point& /*y*/) const {
    return std::nullopt;
  }
  virtual std::optional<AffineForm> affine_form() const { return std::nullopt; }

 protected:
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& w) const = 0;
};

/// F(x, y) = (A y + b, -A^T x + c), the operator of
/// Phi(x, y) = x^T A y + b^T x - c^T y.
class BilinearSaddleOperator final : public OperatorOracle {
 public:
  /// L defaults to the largest singular value of A.
  BilinearSaddleOperator(Eigen::MatrixXd A, Eigen::VectorXd b, Eigen::VectorXd c,
                         std::optional<double> lipschitz = std::nullopt);
  /// b = c = 0.
  explicit BilinearSaddleOperator(Eigen::MatrixXd A,
                                  std::optional<double> lipschitz = std::nullopt);

  std::size_t dimension() const override { return split_.m(); }
  double lipschitz() const override { return lipschitz_; }
  std::optional<SaddleSplit> split() const override { return split_; }
  std::optional<double> saddle_value(const Point& x, const Point& y) const override;
  std::optional<AffineForm> affine_form() const override;

  const Eigen::MatrixXd& A() const noexcept { return A_; }
  const Eigen::VectorXd& b() const noexcept { return b_; }
  const Eigen::VectorXd& c() const noexcept { return c_; }

 protected:
  Eigen::VectorXd apply(const Eigen::VectorXd& w) const override;

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  Eigen::VectorXd c_;
  SaddleSplit split_;
  double lipschitz_;
};

/// F(w) = M w + q with M + M^T positive semidefinite (checked on construction).
class AffineOperator final : public OperatorOracle {
 public:
  AffineOperator(Eigen::MatrixXd M, Eigen::VectorXd q,
                 std::optional<double> lipschitz = std::nullopt);

  std::size_t dimension() const override { return static_cast<std::size_t>(M_.rows()); }
  double lipschitz() const override { return lipschitz_; }
  std::optional<AffineForm> affine_form() const override { return AffineForm{M_, q_}; }

 protected:
  Eigen::VectorXd apply(const Eigen::VectorXd& w) const override { return M_ * w + q_; }

 private:
  Eigen::MatrixXd M_;
  Eigen::VectorXd q_;
  double lipschitz_;
};

/// Unbiased estimator F(w; xi) = F(w) + xi with xi isotropic Gaussian,
/// per-coordinate variance sigma^2 / m, so that E||xi||^2 = sigma^2.
/// Owns its random stream; each call draws a fresh sample.
class StochasticOracle {
 public:
  StochasticOracle(std::shared_ptr<const OperatorOracle> base, double sigma, RngStream stream);

  Point eval(const Point& w);
  const OperatorOracle& base() const noexcept { return *base_; }
  double sigma() const noexcept { return sigma_; }
  std::uint64_t calls() const noexcept { return calls_; }

 private:
  std::shared_ptr<const OperatorOracle> base_;
  double sigma_;
  double coord_stddev_;
  RngStream stream_;
  std::uint64_t calls_ = 0;
};

inline Point eval(const OperatorOracle& F, const Point& w) { return F.eval(w); }
inline Point eval_stochastic(StochasticOracle& S, const Point& w) { return S.eval(w); }

/// Largest singular value by power iteration on M^T M; stops when the
/// relative change of the estimate drops below 1e-12 (at most 10^4 steps).
double spectral_norm(const Eigen::MatrixXd& M);

/// Largest singular value of A. Throws ZeroOperatorError for A = 0.
double lipschitz_estimate(const BilinearSaddleOperator& F);

/// Gaussian A rescaled so that its largest singular value is spectral_cap;
/// b = c = 0. Reproducible from seed.
BilinearSaddleOperator random_instance(std::size_t d, std::size_t n, std::uint64_t seed,
                                       double spectral_cap);

}  // namespace fbfkit
