#include "fbfkit/operators.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace fbfkit {

Point OperatorOracle::eval(const Point& w) const {
  if (w.size() != dimension()) {
    throw DimensionError("operator expects dimension " + std::to_string(dimension()) +
                         ", got " + std::to_string(w.size()));
  }
  return Point(apply(w.vec()));
}

BilinearSaddleOperator::BilinearSaddleOperator(Eigen::MatrixXd A, Eigen::VectorXd b,
                                               Eigen::VectorXd c,
                                               std::optional<double> lipschitz)
    : A_(std::move(A)), b_(std::move(b)), c_(std::move(c)) {
  if (A_.rows() == 0 || A_.cols() == 0) throw DimensionError("A must be non-empty");
  if (b_.size() != A_.rows()) throw DimensionError("b must have d = rows(A) entries");
  if (c_.size() != A_.cols()) throw DimensionError("c must have n = cols(A) entries");
  if (!A_.allFinite() || !b_.allFinite() || !c_.allFinite()) {
    throw NonFiniteError("bilinear operator data must be finite");
  }
  split_ = SaddleSplit(static_cast<std::size_t>(A_.rows()), static_cast<std::size_t>(A_.cols()));
  if (lipschitz) {
    if (!(*lipschitz > 0.0) || !std::isfinite(*lipschitz)) {
      throw ParameterError("Lipschitz constant must be positive and finite");
    }
    lipschitz_ = *lipschitz;
  } else {
    lipschitz_ = lipschitz_estimate(*this);
  }
}

BilinearSaddleOperator::BilinearSaddleOperator(Eigen::MatrixXd A, std::optional<double> lipschitz)
    : BilinearSaddleOperator(A, Eigen::VectorXd::Zero(A.rows()), Eigen::VectorXd::Zero(A.cols()),
                             lipschitz) {}

Eigen::VectorXd BilinearSaddleOperator::apply(const Eigen::VectorXd& w) const {
  const auto d = A_.rows();
  const auto n = A_.cols();
  Eigen::VectorXd out(d + n);
  out.head(d) = A_ * w.tail(n) + b_;
  out.tail(n) = -A_.transpose() * w.head(d) + c_;
  return out;
}

std::optional<double> BilinearSaddleOperator::saddle_value(const Point& x, const Point& y) const {
  if (x.size() != split_.d || y.size() != split_.n) {
    throw DimensionError("saddle value: block dimensions do not match A");
  }
  return x.vec().dot(A_ * y.vec()) + b_.dot(x.vec()) - c_.dot(y.vec());
}

std::optional<AffineForm> BilinearSaddleOperator::affine_form() const {
  const auto d = A_.rows();
  const auto n = A_.cols();
  AffineForm form{Eigen::MatrixXd::Zero(d + n, d + n), Eigen::VectorXd(d + n)};
  form.M.topRightCorner(d, n) = A_;
  form.M.bottomLeftCorner(n, d) = -A_.transpose();
  form.q << b_, c_;
  return form;
}

AffineOperator::AffineOperator(Eigen::MatrixXd M, Eigen::VectorXd q,
                               std::optional<double> lipschitz)
    : M_(std::move(M)), q_(std::move(q)) {
  if (M_.rows() == 0 || M_.rows() != M_.cols()) throw DimensionError("M must be square");
  if (q_.size() != M_.rows()) throw DimensionError("q must match M");
  if (!M_.allFinite() || !q_.allFinite()) throw NonFiniteError("affine data must be finite");
  const Eigen::MatrixXd sym = 0.5 * (M_ + M_.transpose());
  const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym).eigenvalues().minCoeff();
  if (min_eig < -1e-12 * std::max(1.0, M_.norm())) {
    throw ParameterError("affine operator is not monotone (M + M^T has a negative eigenvalue)");
  }
  if (lipschitz) {
    if (!(*lipschitz > 0.0) || !std::isfinite(*lipschitz)) {
      throw ParameterError("Lipschitz constant must be positive and finite");
    }
    lipschitz_ = *lipschitz;
  } else {
    if (M_.isZero(0.0)) throw ZeroOperatorError("zero operator needs an explicit Lipschitz constant");
    lipschitz_ = spectral_norm(M_);
  }
}

StochasticOracle::StochasticOracle(std::shared_ptr<const OperatorOracle> base, double sigma,
                                   RngStream stream)
    : base_(std::move(base)), sigma_(sigma), stream_(stream) {
  if (!base_) throw ParameterError("stochastic oracle needs a base operator");
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) {
    throw ParameterError("sigma must be finite and nonnegative");
  }
  coord_stddev_ = sigma_ / std::sqrt(static_cast<double>(base_->dimension()));
}

Point StochasticOracle::eval(const Point& w) {
  Point exact = base_->eval(w);
  ++calls_;
  if (sigma_ == 0.0) return exact;
  Eigen::VectorXd noisy = exact.vec();
  for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy[i] += coord_stddev_ * stream_.normal();
  return Point(std::move(noisy));
}

double spectral_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0 || M.isZero(0.0)) throw ZeroOperatorError("spectral norm of a zero matrix");
  // Deterministic start with no special alignment to any singular vector.
  RngStream rng(0x5eed'0f'f00dULL);
  Eigen::VectorXd v(M.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();

  double estimate = (M * v).squaredNorm();
  for (int iter = 0; iter < 10000; ++iter) {
    Eigen::VectorXd next = M.transpose() * (M * v);
    const double len = next.norm();
    if (len == 0.0) {
      // Start vector fell into the null space; restart from a fresh direction.
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
      v.normalize();
      continue;
    }
    v = next / len;
    const double updated = (M * v).squaredNorm();
    const double change = std::abs(updated - estimate) / updated;
    estimate = updated;
    if (change < 1e-12) break;
  }
  return std::sqrt(estimate);
}

double lipschitz_estimate(const BilinearSaddleOperator& F) { return spectral_norm(F.A()); }

BilinearSaddleOperator random_instance(std::size_t d, std::size_t n, std::uint64_t seed,
                                       double spectral_cap) {
  if (d == 0 || n == 0) throw DimensionError("random instance needs d, n >= 1");
  if (!(spectral_cap > 0.0)) throw ParameterError("spectral cap must be positive");
  RngStream rng(seed);
  Eigen::MatrixXd A(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = rng.normal();
  }
  const double top = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
  A *= spectral_cap / top;
  return BilinearSaddleOperator(std::move(A), spectral_cap);
}

}  // namespace fbfkit
