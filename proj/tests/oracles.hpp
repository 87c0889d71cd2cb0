#pragma once

// Reference computations written independently of the library, used as
// expected values in tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace oracles {

inline double soft(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

inline double clamp1(double v) { return std::min(1.0, std::max(-1.0, v)); }

/// Restricted gap of min_x max_{|y|<=1} kappa|x| + xy over B = [-1,1]^2,
/// worked out by hand: sup_y u y = |u|, -inf_x (x v + kappa|x|) = max(|v| - kappa, 0).
inline double toy_gap(double kappa, double u, double v) {
  if (std::abs(v) > 1.0) return std::numeric_limits<double>::infinity();
  return (1.0 + kappa) * std::abs(u) + std::max(std::abs(v) - kappa, 0.0);
}

/// w_{k+1} = w_k - alpha (2 F(w_k) - F(w_{k-1})), started from w_{-1} and w_0.
inline std::vector<Eigen::VectorXd> ogda(const Eigen::MatrixXd& M, const Eigen::VectorXd& q,
                                         const Eigen::VectorXd& w_minus1, const Eigen::VectorXd& w0,
                                         double alpha, int steps) {
  std::vector<Eigen::VectorXd> w{w0};
  Eigen::VectorXd F_prev = M * w_minus1 + q;
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd F = M * w.back() + q;
    w.push_back(w.back() - alpha * (2.0 * F - F_prev));
    F_prev = F;
  }
  return w;
}

/// Simultaneous gradient descent ascent on Phi = x y.
inline Eigen::Vector2d gda_xy(const Eigen::Vector2d& z, double alpha) {
  return {z[0] - alpha * z[1], z[1] + alpha * z[0]};
}

/// Largest singular value through the eigenvalues of A^T A (2x2 only).
inline double spectral_norm_2x2(double a, double b, double c, double d) {
  const double p = a * a + c * c;
  const double q = a * b + c * d;
  const double r = b * b + d * d;
  const double tr = p + r;
  const double det = p * r - q * q;
  return std::sqrt(0.5 * (tr + std::sqrt(tr * tr - 4.0 * det)));
}

}  // namespace oracles
