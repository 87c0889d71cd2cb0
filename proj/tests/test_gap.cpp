#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "fbfkit/gap.hpp"
#include "oracles.hpp"

using namespace fbfkit;

namespace {

const CompactBox kB = CompactBox::cube(2, -1, 1);

ProblemInstance xy_problem() {
  Eigen::MatrixXd A(1, 1);
  A(0, 0) = 1.0;
  return ProblemInstance(std::make_shared<BilinearSaddleOperator>(A),
                         std::make_shared<ZeroRegularizer>());
}

}  // namespace

TEST_CASE("toy gap values") {
  const auto p = toy_problem(0.01);
  for (GapKind kind : {GapKind::Minimax, GapKind::VI}) {
    const GapEvaluator e(p, kB, kind);
    CHECK(std::abs(e(Point{0, 0}).value()) <= 1e-12);
    CHECK(e(Point{0.5, 0}).value() == doctest::Approx(0.505).epsilon(1e-14));
    CHECK(e(Point{0.5, 0}).value() == doctest::Approx(oracles::toy_gap(0.01, 0.5, 0)));
    CHECK(e(Point{0, 2}).is_pos_inf());
  }
  CHECK(GapEvaluator::default_kind(p) == GapKind::Minimax);
}

TEST_CASE("closed-form gap agrees with the hand formula on samples") {
  const auto p = toy_problem(0.01);
  const GapEvaluator mm(p, kB, GapKind::Minimax);
  const GapEvaluator vi(p, kB, GapKind::VI);
  RngStream rng(4);
  for (int t = 0; t < 1000; ++t) {
    const double u = rng.uniform(-1, 1);
    const double v = rng.uniform(-1, 1);
    const double ref = oracles::toy_gap(0.01, u, v);
    CHECK(mm(Point{u, v}).value() == doctest::Approx(ref).epsilon(1e-13));
    CHECK(vi(Point{u, v}).value() == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("minimax gap of xy") {
  const GapEvaluator e(xy_problem(), kB, GapKind::Minimax);
  CHECK(e(Point{1, 0}).value() == doctest::Approx(1.0));
}

TEST_CASE("g_value") {
  const auto p = toy_problem(0.01);
  CHECK(g_value(p, Point{0.3, 0.4}, Point{0.3, 0.4}).value() == 0.0);
  CHECK(g_value(p, Point{0, 0}, Point{1, 1}).value() == doctest::Approx(-0.01));
  RngStream rng(2);
  for (int t = 0; t < 1000; ++t) {
    const Point w{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Point z{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    // monotone F: g(w,z) >= <F(z), w - z> + r(w) - r(z)
    CHECK(g_value(p, w, z).value() >= gap_integrand(p, GapKind::VI, w, z).value() - 1e-12);
  }
}

TEST_CASE("grid oracle") {
  const auto p = toy_problem(0.01);
  CHECK(grid_gap_oracle(p, kB, Point{0, 0}, 2, GapKind::Minimax).value() == doctest::Approx(-0.01));
  CHECK(grid_gap_oracle(p, kB, Point{0, 0}, 2, GapKind::VI).value() == doctest::Approx(-0.01));

  const Point w{0.31, -0.47};
  double prev = -1e300;
  for (std::size_t ppa : {2u, 3u, 5u, 9u, 17u, 33u}) {
    const double g = grid_gap_oracle(p, kB, w, ppa, GapKind::Minimax).value();
    CHECK(g >= prev);
    prev = g;
  }
  CHECK(grid_gap_oracle(p, kB, Point{0.5, 0}, 2001, GapKind::Minimax).value() ==
        doctest::Approx(0.505).epsilon(2e-3 / 0.505));
  CHECK_THROWS_AS(grid_gap_oracle(p, kB, w, 1, GapKind::VI), ParameterError);

  auto F4 = std::make_shared<BilinearSaddleOperator>(random_instance(2, 2, 1, 1.0));
  const ProblemInstance p4(F4, std::make_shared<ZeroRegularizer>());
  CHECK_THROWS_AS(grid_gap_oracle(p4, CompactBox::cube(4, -1, 1), Point::zeros(4), 3, GapKind::VI),
                  CapabilityError);
}

TEST_CASE("closed form minus grid lies in [0, 5e-3]") {
  const auto p = toy_problem(0.01);
  RngStream rng(17);
  for (GapKind kind : {GapKind::Minimax, GapKind::VI}) {
    const GapEvaluator exact(p, kB, kind);
    for (int t = 0; t < 6; ++t) {
      const Point w{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const double diff = exact(w).value() - grid_gap_oracle(p, kB, w, 2001, kind).value();
      CHECK(diff >= -1e-12);
      CHECK(diff <= 5e-3);
    }
  }
}

TEST_CASE("gap is nonnegative on B") {
  const auto p = toy_problem(0.01);
  RngStream rng(23);
  const GapEvaluator mm(p, kB, GapKind::Minimax);
  const GapEvaluator vi(p, kB, GapKind::VI);
  const GapEvaluator grid_mm(p, kB, GapKind::Minimax, GapMethod::Grid, 21);
  const GapEvaluator grid_vi(p, kB, GapKind::VI, GapMethod::Grid, 21);
  for (int t = 0; t < 1000; ++t) {
    const Point w{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    CHECK(mm(w).value() >= -1e-15);
    CHECK(vi(w).value() >= -1e-15);
    CHECK(grid_mm(w).value() >= 0.0);
    CHECK(grid_vi(w).value() >= 0.0);
  }
}

TEST_CASE("closed form on an affine skew operator") {
  // A bilinear operator passed through its affine form gives the same vi gap.
  auto B = std::make_shared<BilinearSaddleOperator>(random_instance(2, 1, 3, 1.0));
  const auto form = B->affine_form();
  auto A = std::make_shared<AffineOperator>(form->M, form->q);
  auto r = std::make_shared<L1Regularizer>(0.05);
  const CompactBox box = CompactBox::cube(3, -1, 1);
  const GapEvaluator eb(ProblemInstance(B, r), box, GapKind::VI);
  const GapEvaluator ea(ProblemInstance(A, r), box, GapKind::VI);
  const GapEvaluator grid(ProblemInstance(A, r), box, GapKind::VI, GapMethod::Grid, 41);
  RngStream rng(6);
  for (int t = 0; t < 50; ++t) {
    const Point w{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    CHECK(ea(w).value() == doctest::Approx(eb(w).value()).epsilon(1e-12));
    CHECK(ea(w).value() >= grid(w).value() - 1e-12);
  }
}

TEST_CASE("strong inequality implies the weak one on samples") {
  // <F(z), w - z> + r(w) - r(z) <= g(w, z) by monotonicity, so g <= 0 forces
  // the weak form to hold for the same z.
  const auto p = toy_problem(0.01);
  RngStream rng(9);
  int strong = 0;
  for (int t = 0; t < 5000; ++t) {
    const Point w{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const Point z{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    if (g_value(p, w, z).value() > 0.0) continue;
    ++strong;
    CHECK(gap_integrand(p, GapKind::VI, w, z).value() <= 1e-15);
  }
  CHECK(strong > 100);
  for (int t = 0; t < 100; ++t) {
    const Point z{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    CHECK(g_value(p, Point{0, 0}, z).value() <= 0.0);
  }
}

TEST_CASE("ergodic inequality on completed traces") {
  for (Method m : {Method::FBF, Method::FBFp, Method::EG, Method::EGp}) {
    const auto p = toy_problem(0.01);
    const double alpha = (m == Method::FBF || m == Method::EG) ? 1.0 : 0.5;
    RunOptions o;
    o.stride = 1;
    const auto t = run({m}, p, Point{-0.7, 0.9}, StepSchedule::inverse_sqrt(alpha), 500, 0, o);
    std::vector<Point> ws;
    std::vector<double> as;
    for (const auto& r : t.records) {
      ws.push_back(r.w);
      as.push_back(r.alpha);
    }
    ErgodicGBound acc(p, kB);
    for (std::size_t k = 0; k < ws.size(); ++k) acc.add(ws[k], as[k]);
    const GapEvaluator vi(p, kB, GapKind::VI);
    CHECK(acc.supremum().value() >= vi(t.final_wbar).value() - 1e-12);
    CHECK(ergodic_g_sup(p, kB, ws, as) == acc.supremum());
    for (const Point& z : kB.corners()) {
      // direct weighted sum as an independent check of the accumulator
      double direct = 0.0;
      double total = 0.0;
      for (std::size_t k = 0; k < ws.size(); ++k) {
        direct += as[k] * g_value(p, ws[k], z).value();
        total += as[k];
      }
      CHECK(acc.average_at(z).value() == doctest::Approx(direct / total).epsilon(1e-10));
      CHECK(direct / total >= gap_integrand(p, GapKind::VI, t.final_wbar, z).value() - 1e-12);
    }
  }
}
