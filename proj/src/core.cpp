#include "fbfkit/core.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace fbfkit {

namespace {

void check_finite(const Eigen::VectorXd& v) {
  if (!v.allFinite()) {
    throw NonFiniteError("point has a non-finite coordinate");
  }
}

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Point::Point(Eigen::VectorXd coords) : coords_(std::move(coords)) { check_finite(coords_); }

Point::Point(std::initializer_list<double> coords)
    : coords_(static_cast<Eigen::Index>(coords.size())) {
  Eigen::Index i = 0;
  for (double c : coords) coords_[i++] = c;
  check_finite(coords_);
}

Point::Point(std::span<const double> coords)
    : coords_(Eigen::Map<const Eigen::VectorXd>(coords.data(),
                                                static_cast<Eigen::Index>(coords.size()))) {
  check_finite(coords_);
}

Point Point::zeros(std::size_t m) {
  return Point(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m)));
}

std::vector<double> Point::to_vector() const {
  return std::vector<double>(coords_.data(), coords_.data() + coords_.size());
}

Point Point::segment(std::size_t start, std::size_t length) const {
  if (start + length > size()) {
    throw DimensionError("segment exceeds point dimension");
  }
  return Point(Eigen::VectorXd(coords_.segment(static_cast<Eigen::Index>(start),
                                               static_cast<Eigen::Index>(length))));
}

void require_same_size(const Point& p, const Point& q, const char* what) {
  if (p.size() != q.size()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" +
                         std::to_string(p.size()) + " vs " + std::to_string(q.size()) + ")");
  }
}

double norm(const Point& p) { return p.vec().norm(); }

double dot(const Point& p, const Point& q) {
  require_same_size(p, q, "dot");
  return p.vec().dot(q.vec());
}

Point axpy(double a, const Point& p, const Point& q) {
  require_same_size(p, q, "axpy");
  return Point(Eigen::VectorXd(a * p.vec() + q.vec()));
}

Point operator+(const Point& p, const Point& q) {
  require_same_size(p, q, "add");
  return Point(Eigen::VectorXd(p.vec() + q.vec()));
}

Point operator-(const Point& p, const Point& q) {
  require_same_size(p, q, "subtract");
  return Point(Eigen::VectorXd(p.vec() - q.vec()));
}

Point operator*(double a, const Point& p) { return Point(Eigen::VectorXd(a * p.vec())); }

Point concat(const Point& x, const Point& y) {
  Eigen::VectorXd v(x.vec().size() + y.vec().size());
  v << x.vec(), y.vec();
  return Point(std::move(v));
}

SaddleSplit::SaddleSplit(std::size_t primal, std::size_t dual) : d(primal), n(dual) {
  if (d + n == 0) throw DimensionError("saddle split must have d + n >= 1");
}

Point SaddleSplit::primal(const Point& w) const {
  if (w.size() != m()) throw DimensionError("point does not match saddle split");
  return w.segment(0, d);
}

Point SaddleSplit::dual(const Point& w) const {
  if (w.size() != m()) throw DimensionError("point does not match saddle split");
  return w.segment(d, n);
}

CompactBox::CompactBox(Point lower, Point upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  require_same_size(lower_, upper_, "box");
  if (lower_.size() == 0) throw DimensionError("box must have dimension >= 1");
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    if (lower_[i] > upper_[i]) {
      throw ParameterError("box lower bound exceeds upper bound at coordinate " +
                           std::to_string(i));
    }
  }
  diameter_ = (upper_.vec() - lower_.vec()).norm();
  if (!(diameter_ > 0.0)) throw DegenerateSetError("box has zero diameter");
}

CompactBox CompactBox::cube(std::size_t m, double lo, double hi) {
  const auto em = static_cast<Eigen::Index>(m);
  return CompactBox(Point(Eigen::VectorXd::Constant(em, lo)),
                    Point(Eigen::VectorXd::Constant(em, hi)));
}

bool CompactBox::contains(const Point& w) const {
  if (w.size() != dimension()) return false;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] < lower_[i] || w[i] > upper_[i]) return false;
  }
  return true;
}

Point CompactBox::clamp(const Point& w) const {
  require_same_size(w, lower_, "box clamp");
  return Point(Eigen::VectorXd(w.vec().cwiseMax(lower_.vec()).cwiseMin(upper_.vec())));
}

std::vector<Point> CompactBox::corners() const {
  const std::size_t m = dimension();
  if (m > 20) throw CapabilityError("too many box corners to enumerate");
  std::vector<Point> out;
  out.reserve(std::size_t{1} << m);
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    Eigen::VectorXd c(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
      c[static_cast<Eigen::Index>(i)] = (mask >> i) & 1U ? upper_[i] : lower_[i];
    }
    out.emplace_back(std::move(c));
  }
  return out;
}

double box_diameter(const CompactBox& b) { return b.diameter(); }

RngStream::RngStream(std::uint64_t seed) : seed_(seed) {
  std::uint64_t x = seed;
  for (auto& s : state_) s = splitmix64(x);
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::normal() {
  if (spare_normal_) {
    const double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  // 1 - uniform() lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index) {
  std::uint64_t x = master_seed;
  const std::uint64_t a = splitmix64(x);
  std::uint64_t y = run_index ^ 0xd1b54a32d192ed03ULL;
  const std::uint64_t b = splitmix64(y);
  std::uint64_t z = a ^ rotl(b, 23);
  return splitmix64(z);
}

}  // namespace fbfkit
