#include <doctest.h>

#include <cmath>
#include <memory>

#include "fbfkit/operators.hpp"
#include "oracles.hpp"

using namespace fbfkit;

namespace {

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) M(i, j++) = v;
    ++i;
  }
  return M;
}

Point random_point(RngStream& rng, std::size_t m) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(m));
  for (auto& x : v) x = rng.normal();
  return Point(v);
}

}  // namespace

TEST_CASE("bilinear eval examples") {
  const BilinearSaddleOperator F(mat({{1.0}}));
  CHECK(eval(F, Point{1, 1}) == Point{1, -1});
  CHECK(eval(F, Point{0, 0}) == Point{0, 0});
  CHECK(eval(F, Point{2, -3}) == Point{-3, -2});
  CHECK_THROWS_AS(eval(F, Point{1, 2, 3}), DimensionError);
}

TEST_CASE("bilinear eval against direct arithmetic with offsets") {
  Eigen::MatrixXd A = mat({{1, 2, 0}, {-1, 0.5, 3}});
  Eigen::VectorXd b(2);
  b << 0.3, -0.2;
  Eigen::VectorXd c(3);
  c << 1, 0, -1;
  const BilinearSaddleOperator F(A, b, c);
  const Point w{0.5, -1, 2, 1, -0.5};
  const Point out = F.eval(w);
  // x = (0.5,-1), y = (2,1,-0.5)
  CHECK(out[0] == doctest::Approx(1 * 2 + 2 * 1 + 0 * -0.5 + 0.3));
  CHECK(out[1] == doctest::Approx(-1 * 2 + 0.5 * 1 + 3 * -0.5 - 0.2));
  CHECK(out[2] == doctest::Approx(-(1 * 0.5 + -1 * -1) + 1));
  CHECK(out[3] == doctest::Approx(-(2 * 0.5 + 0.5 * -1) + 0));
  CHECK(out[4] == doctest::Approx(-(0 * 0.5 + 3 * -1) - 1));
  const auto phi = F.saddle_value(Point{0.5, -1}, Point{2, 1, -0.5});
  REQUIRE(phi);
  const double xAy = 0.5 * (2 + 2 - 0) + -1 * (-2 + 0.5 - 1.5);
  CHECK(*phi == doctest::Approx(xAy + (0.5 * 0.3 + -1 * -0.2) - (2 - -0.5)));
}

TEST_CASE("lipschitz estimates") {
  CHECK(lipschitz_estimate(BilinearSaddleOperator(mat({{1.0}}))) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lipschitz_estimate(BilinearSaddleOperator(mat({{2, 0}, {0, 1}}))) ==
        doctest::Approx(2.0).epsilon(1e-12));
  const double golden = oracles::spectral_norm_2x2(1, 1, 0, 1);
  CHECK(golden == doctest::Approx(1.618034).epsilon(1e-6));
  CHECK(lipschitz_estimate(BilinearSaddleOperator(mat({{1, 1}, {0, 1}}))) ==
        doctest::Approx(golden).epsilon(1e-12));
  CHECK_THROWS_AS(BilinearSaddleOperator(mat({{0.0}})), ZeroOperatorError);
}

TEST_CASE("random instances") {
  const auto one = random_instance(1, 1, 9, 1.0);
  CHECK(std::abs(one.A()(0, 0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(one.lipschitz() == doctest::Approx(1.0));
  for (std::uint64_t s : {1u, 2u, 3u}) {
    const auto F = random_instance(5, 5, s, 2.0);
    CHECK(std::abs(lipschitz_estimate(F) - 2.0) <= 1e-9);
    CHECK(random_instance(5, 5, s, 2.0).A() == F.A());
  }
  CHECK(random_instance(5, 5, 1, 2.0).A() != random_instance(5, 5, 2, 2.0).A());
}

TEST_CASE("skew property and Lipschitz certificate") {
  RngStream rng(31);
  for (int inst = 0; inst < 5; ++inst) {
    const auto F = random_instance(3, 4, 100 + inst, 1.5);
    for (int t = 0; t < 200; ++t) {
      const Point z = random_point(rng, 7);
      const Point zp = random_point(rng, 7);
      const Point dF = F.eval(z) - F.eval(zp);
      CHECK(std::abs(dot(dF, z - zp)) <= 1e-12 * (1.0 + norm(z - zp) * norm(z - zp)));
      CHECK(norm(dF) <= (F.lipschitz() + 1e-9) * norm(z - zp));
    }
  }
}

TEST_CASE("affine operator monotonicity") {
  Eigen::MatrixXd M = mat({{1, 2}, {-2, 0.5}});
  const AffineOperator F(M, Eigen::VectorXd::Zero(2));
  RngStream rng(3);
  for (int t = 0; t < 1000; ++t) {
    const Point z = random_point(rng, 2);
    const Point zp = random_point(rng, 2);
    const Point dF = F.eval(z) - F.eval(zp);
    CHECK(dot(dF, z - zp) >= -1e-12);
    CHECK(norm(dF) <= (F.lipschitz() + 1e-9) * norm(z - zp));
  }
  CHECK_THROWS_AS(AffineOperator(mat({{-1, 0}, {0, 1}}), Eigen::VectorXd::Zero(2)), ParameterError);
  CHECK_THROWS_AS(AffineOperator(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2)),
                  ZeroOperatorError);
  CHECK_NOTHROW(AffineOperator(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXd::Zero(2), 1.0));
}

TEST_CASE("stochastic oracle") {
  auto F = std::make_shared<BilinearSaddleOperator>(mat({{1.0}}));
  const Point w{0.3, -0.7};
  const Point exact = F->eval(w);

  StochasticOracle zero(F, 0.0, RngStream(1));
  CHECK(eval_stochastic(zero, w) == exact);
  CHECK(zero.calls() == 1);

  const double sigma = 0.1;
  const int n = 100000;
  StochasticOracle S(F, sigma, RngStream(77));
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd noise = eval_stochastic(S, w).vec() - exact.vec();
    mean += noise;
    sq += noise.squaredNorm();
  }
  mean /= n;
  CHECK(std::abs(mean[0]) <= 3 * sigma / std::sqrt(n));
  CHECK(std::abs(mean[1]) <= 3 * sigma / std::sqrt(n));
  CHECK(sq / n == doctest::Approx(sigma * sigma).epsilon(0.05));
  CHECK(S.calls() == static_cast<std::uint64_t>(n));
}
