#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fbfkit/errors.hpp"

namespace fbfkit {

/// An immutable point of the ambient space R^m. Every coordinate is finite;
/// construction from a vector containing NaN or inf throws NonFiniteError.
class Point {
 public:
  Point() = default;
  explicit Point(Eigen::VectorXd coords);
  Point(std::initializer_list<double> coords);
  explicit Point(std::span<const double> coords);

  static Point zeros(std::size_t m);

  std::size_t size() const noexcept { return static_cast<std::size_t>(coords_.size()); }
  double operator[](std::size_t i) const { return coords_[static_cast<Eigen::Index>(i)]; }
  const Eigen::VectorXd& vec() const noexcept { return coords_; }
  std::vector<double> to_vector() const;

  /// Coordinates [start, start + length) as a new point.
  Point segment(std::size_t start, std::size_t length) const;

  friend bool operator==(const Point& a, const Point& b) {
    return a.coords_.size() == b.coords_.size() && a.coords_ == b.coords_;
  }

 private:
  Eigen::VectorXd coords_;
};

double norm(const Point& p);
double dot(const Point& p, const Point& q);
/// a * p + q, coordinatewise.
Point axpy(double a, const Point& p, const Point& q);
Point operator+(const Point& p, const Point& q);
Point operator-(const Point& p, const Point& q);
Point operator*(double a, const Point& p);
/// (x, y) stacked into one point of dimension dim(x) + dim(y).
Point concat(const Point& x, const Point& y);

/// Partition of R^m into a primal block of size d and a dual block of size n.
struct SaddleSplit {
  std::size_t d = 0;
  std::size_t n = 0;

  SaddleSplit() = default;
  SaddleSplit(std::size_t primal, std::size_t dual);
  std::size_t m() const noexcept { return d + n; }

  Point primal(const Point& w) const;
  Point dual(const Point& w) const;

  friend bool operator==(const SaddleSplit&, const SaddleSplit&) = default;
};

/// Axis-aligned box {w : lower <= w <= upper} with strictly positive diameter.
class CompactBox {
 public:
  CompactBox(Point lower, Point upper);

  /// [lo, hi]^m
  static CompactBox cube(std::size_t m, double lo, double hi);

  const Point& lower() const noexcept { return lower_; }
  const Point& upper() const noexcept { return upper_; }
  std::size_t dimension() const noexcept { return lower_.size(); }
  bool contains(const Point& w) const;
  double diameter() const noexcept { return diameter_; }
  Point clamp(const Point& w) const;
  /// All 2^m corners; intended for small m.
  std::vector<Point> corners() const;

 private:
  Point lower_;
  Point upper_;
  double diameter_ = 0.0;
};

double box_diameter(const CompactBox& b);

/// Deterministic random stream: xoshiro256** seeded through splitmix64.
/// Gaussian samples use the Box-Muller transform on 53-bit
/// uniforms, so streams are reproducible across platforms given the same libm.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
  std::optional<double> spare_normal_;
};

/// Seed of run `run_index` under `master_seed`.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index);

void require_same_size(const Point& p, const Point& q, const char* what);

}  // namespace fbfkit
