// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass a criterion number to run only that one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include "fbfkit/harness.hpp"
#include "oracles.hpp"

using namespace fbfkit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const CompactBox kB = CompactBox::cube(2, -1, 1);
const Point kZ0{-0.7, 0.9};

ExperimentConfig toy(Method m, double alpha, std::size_t K) {
  ExperimentConfig cfg = toy_config(m, 0.01, K);
  cfg.schedule = StepSchedule::constant(alpha);
  cfg.bound = resolve_bound(BoundKind::Auto, cfg.kind, cfg.schedule);
  return cfg;
}

ExperimentConfig stochastic_toy(Method m, double alpha, StepRegime regime) {
  ExperimentConfig cfg(toy_problem(0.01, 0.1), kB, kZ0);
  cfg.name = "stochastic_" + to_string(m);
  cfg.kind = SolverKind{m, Mode::Stochastic, PgdaVariant::Alternating, regime};
  cfg.schedule = StepSchedule::inverse_sqrt(alpha);
  cfg.K = 100000;
  for (std::uint64_t s = 0; s < 20; ++s) cfg.seeds.push_back(s);
  cfg.checkpoints.type = CheckpointSpec::Type::LogSpaced;
  cfg.checkpoints.per_decade = 20;
  cfg.bound = resolve_bound(BoundKind::Auto, cfg.kind, cfg.schedule);
  cfg.rate_window = std::make_pair(1e3, 1e5);
  return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Deterministic bound with a checkpoint at every K.
Outcome deterministic_bound(Method m, double alpha, double numerator) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg = toy(m, alpha, 10000);
  cfg.checkpoints.type = CheckpointSpec::Type::Every;
  cfg.checkpoints.stride = 1;
  const auto s = run_experiment(cfg, 0);
  const double secs = seconds_since(t0);
  const auto& r = s.runs[0];
  // independent recomputation of the bound column
  std::size_t mismatched = 0;
  std::size_t violations = 0;
  for (const auto& p : r.bound.points) {
    const double bound = numerator / static_cast<double>(p.K);
    if (std::abs(p.bound - bound) > 1e-15 * bound) ++mismatched;
    if (p.gap > bound + 1e-10) ++violations;
  }
  Outcome o;
  o.pass = r.bound.points.size() == 10000 && violations == 0 && r.bound.violations == 0 &&
           mismatched == 0 && secs < 5.0;
  o.detail = std::to_string(r.bound.points.size()) + " checkpoints, " +
             std::to_string(violations) + " violations, final gap " +
             fmt("%.3e", r.row_gap.back()) + ", " + fmt("%.2f s", secs);
  return o;
}

Outcome c1() { return deterministic_bound(Method::FBF, 1.0, 4.0); }
Outcome c2() { return deterministic_bound(Method::FBFp, 0.5, 8.0); }

Outcome c3() {
  Outcome o{true, ""};
  for (auto [m, a] : {std::pair{Method::FBF, 1.0}, std::pair{Method::FBFp, 0.5}}) {
    ExperimentConfig cfg = toy(m, a, 10000);
    cfg.rate_window = std::make_pair(1e2, 1e4);
    const auto s = run_experiment(cfg, 0);
    const auto& rate = s.runs[0].rate;
    const bool ok = rate && rate->slope >= -1.25 && rate->slope <= -0.75;
    o.pass = o.pass && ok;
    o.detail += to_string(m) + " slope " + (rate ? fmt("%.4f", rate->slope) : "n/a") + "  ";
  }
  return o;
}

// Bound recomputed from the schedule rather than read from the report.
double theorem2_bound(std::size_t K, double a, double constant) {
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double ak = a / std::sqrt(static_cast<double>(k + 1));
    s1 += ak;
    s2 += ak * ak;
  }
  return (8.0 + constant * 0.01 * s2) / (2.0 * s1);
}

Outcome sweep_check(const ExperimentConfig& cfg, double constant, const SweepResult& r) {
  std::size_t violations = 0;
  double worst = -1e300;
  for (const auto& p : r.points) {
    const double bound = theorem2_bound(p.K, cfg.schedule.alpha(), constant);
    if (p.mean_gap > bound + 2.0 * p.standard_error) ++violations;
    worst = std::max(worst, (p.mean_gap - 2.0 * p.standard_error) / bound);
  }
  Outcome o;
  o.pass = violations == 0 && r.report.violations == 0 && r.seeds == 20;
  o.detail = std::to_string(r.points.size()) + " checkpoints, " + std::to_string(violations) +
             " violations, max (mean-2SE)/bound " + fmt("%.3f", worst);
  return o;
}

SweepResult& fbf_sweep() {
  static SweepResult r = expectation_sweep(stochastic_toy(Method::FBF, 1.0 / std::sqrt(2.0),
                                                          StepRegime::Standard), 0);
  return r;
}

SweepResult& fbfp_sweep() {
  static SweepResult r =
      expectation_sweep(stochastic_toy(Method::FBFp, 1.0 / 3.0, StepRegime::Standard), 0);
  return r;
}

Outcome c4() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = stochastic_toy(Method::FBF, 1.0 / std::sqrt(2.0), StepRegime::Standard);
  Outcome o = sweep_check(cfg, 18.0, fbf_sweep());
  const double secs = seconds_since(t0);
  o.pass = o.pass && secs < 120.0;
  o.detail += ", " + fmt("%.1f s", secs);
  return o;
}

Outcome c5() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = stochastic_toy(Method::FBFp, 1.0 / 3.0, StepRegime::Standard);
  Outcome standard = sweep_check(cfg, 18.0, fbfp_sweep());

  const double a = 0.35;
  const double refined_constant = 2.0 * (5.0 + 4.0 * a * a / (1.0 - 8.0 * a * a));
  const auto rcfg = stochastic_toy(Method::FBFp, a, StepRegime::Refined);
  const auto rr = expectation_sweep(rcfg, 0);
  Outcome refined = sweep_check(rcfg, refined_constant, rr);
  const bool kind_ok = rr.report.kind == BoundKind::StochasticRefinedFbfp;
  bool cap_enforced = false;
  try {
    expectation_sweep(stochastic_toy(Method::FBFp, 0.36, StepRegime::Refined), 0);
  } catch (const ConfigError&) {
    cap_enforced = true;
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = standard.pass && refined.pass && kind_ok && cap_enforced && secs < 120.0;
  o.detail = "alpha=1/3: " + standard.detail + "; refined alpha=0.35: " + refined.detail +
             (cap_enforced ? "; cap enforced" : "; cap NOT enforced") + ", " + fmt("%.1f s", secs);
  return o;
}

Outcome c6() {
  Outcome o{true, ""};
  for (auto* r : {&fbf_sweep(), &fbfp_sweep()}) {
    const bool ok = r->rate && r->rate->slope >= -0.65 && r->rate->slope <= -0.35;
    o.pass = o.pass && ok;
    o.detail += std::string(r == &fbf_sweep() ? "fbf" : "fbfp") + " slope " +
                (r->rate ? fmt("%.4f", r->rate->slope) : "n/a") + "  ";
  }
  return o;
}

Outcome c7() {
  double dev_eg = 0.0;
  double dev_refl = 0.0;
  double dev_ogda = 0.0;
  RunOptions keep;
  keep.stride = 1;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto F = std::make_shared<BilinearSaddleOperator>(random_instance(3, 2, 900 + s, 1.0));
    const ProblemInstance p(F, std::make_shared<ZeroRegularizer>());
    RngStream rng(s);
    Eigen::VectorXd v(5);
    for (auto& x : v) x = rng.normal();
    const Point z0(v);

    const auto fbf = run({Method::FBF}, p, z0, StepSchedule::constant(1.0), 100, 0, keep);
    const auto eg = run({Method::EG}, p, z0, StepSchedule::constant(1.0), 100, 0, keep);
    for (std::size_t k = 0; k < 100; ++k) {
      dev_eg = std::max(dev_eg, norm(fbf.records[k].z - eg.records[k].z));
      dev_eg = std::max(dev_eg, norm(fbf.records[k].w - eg.records[k].w));
    }

    const double alpha = 0.5;
    const auto fbfp = run({Method::FBFp}, p, z0, StepSchedule::constant(alpha), 100, 0, keep);
    std::vector<Point> refl{fbfp.records[0].w};
    Point F_prev = p.F->eval(z0);
    for (int k = 0; k < 99; ++k) {
      const Point Fw = p.F->eval(refl.back());
      refl.push_back(reflected_step(p, refl.back(), Fw, F_prev, alpha, alpha));
      F_prev = Fw;
    }
    const auto form = F->affine_form();
    const auto ogda = oracles::ogda(form->M, form->q, z0.vec(), fbfp.records[0].w.vec(), alpha, 99);
    for (std::size_t k = 0; k < 100; ++k) {
      dev_refl = std::max(dev_refl, norm(fbfp.records[k].w - refl[k]));
      dev_ogda = std::max(dev_ogda, (fbfp.records[k].w.vec() - ogda[k]).norm());
    }
  }
  Outcome o;
  o.pass = dev_eg <= 1e-12 && dev_refl <= 1e-12 && dev_ogda <= 1e-12;
  o.detail = "max deviation FBF/EG " + fmt("%.2e", dev_eg) + ", FBFp/reflected " +
             fmt("%.2e", dev_refl) + ", FBFp/OGDA " + fmt("%.2e", dev_ogda);
  return o;
}

Outcome c8() {
  // simultaneous GDA norm law on xy
  Eigen::MatrixXd A(1, 1);
  A(0, 0) = 1.0;
  const ProblemInstance xy(std::make_shared<BilinearSaddleOperator>(A),
                           std::make_shared<ZeroRegularizer>());
  const double alpha = 0.1;
  Point x{1.0};
  Point y{1.0};
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double before = x[0] * x[0] + y[0] * y[0];
    const auto next = pgda_step(xy, x, y, alpha, PgdaVariant::Simultaneous);
    x = next.x;
    y = next.y;
    const double after = x[0] * x[0] + y[0] * y[0];
    worst = std::max(worst, std::abs(after - (1 + alpha * alpha) * before) / after);
  }

  // raw-iterate gap of alternating PGDA and of FBF on the toy problem
  const auto toy_p = toy_problem(0.01);
  const GapEvaluator gap(toy_p, kB);
  auto last_gaps = [&](Method m, double a) {
    RunOptions o;
    o.stride = 1;
    double lo = 1e300;
    double hi = 0.0;
    o.on_record = [&](const TraceRecord& r) {
      if (r.k + 1 > 9000) {
        const double g = gap(r.w).to_double();
        lo = std::min(lo, g);
        hi = std::max(hi, g);
      }
    };
    const auto t = run({m}, toy_p, kZ0, StepSchedule::constant(a), 10000, 0, o);
    return std::tuple{lo, hi, gap(t.final_wbar).to_double()};
  };
  const auto [pgda_lo, pgda_hi, pgda_bar] = last_gaps(Method::PGDA, 0.01);
  const auto [fbf_lo, fbf_hi, fbf_bar] = last_gaps(Method::FBF, 1.0);
  (void)fbf_lo;
  (void)pgda_hi;

  Outcome o;
  o.pass = worst <= 1e-12 && pgda_lo >= 0.1 && fbf_hi <= 4e-4 && fbf_bar <= 4e-4;
  o.detail = "norm-law rel. error " + fmt("%.1e", worst) + "; PGDA(alpha=0.01) min iterate gap over K in (9000,10000] " +
             fmt("%.3f", pgda_lo) + " (ergodic " + fmt("%.2e", pgda_bar) + "); FBF max iterate gap " +
             fmt("%.1e", fbf_hi) + " (ergodic " + fmt("%.2e", fbf_bar) + ")";
  return o;
}

Outcome c9() {
  std::vector<std::string> failed;
  RngStream rng(99);

  // prox suites
  auto l1 = std::make_shared<L1Regularizer>(0.3);
  std::vector<std::shared_ptr<const Regularizer>> regs{
      std::make_shared<ZeroRegularizer>(), l1,
      std::make_shared<BoxIndicator>(CompactBox(Point{-1, 0, -2}, Point{1, 0.5, 2})),
      std::make_shared<SeparableSum>(l1, std::make_shared<BoxIndicator>(CompactBox::cube(2, -1, 1)),
                                     SaddleSplit(1, 2))};
  bool prox_ok = true;
  for (const auto& r : regs) {
    for (int t = 0; t < 1000; ++t) {
      const double lambda = rng.uniform(0.05, 2.0);
      const Point u{2 * rng.normal(), 2 * rng.normal(), 2 * rng.normal()};
      const Point v{2 * rng.normal(), 2 * rng.normal(), 2 * rng.normal()};
      const Point pu = r->prox(lambda, u);
      prox_ok = prox_ok && norm(pu - r->prox(lambda, v)) <= norm(u - v) + 1e-12;
      prox_ok = prox_ok && prox_residual_check(*r, lambda, u, pu, 1000, static_cast<std::uint64_t>(t));
    }
  }
  if (!prox_ok) failed.emplace_back("prox");

  // operator certificates
  bool op_ok = true;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto F = random_instance(2, 3, s, 1.7);
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd a(5);
      Eigen::VectorXd b(5);
      for (auto& x : a) x = rng.normal();
      for (auto& x : b) x = rng.normal();
      const Point z(a);
      const Point zp(b);
      const Point dF = F.eval(z) - F.eval(zp);
      op_ok = op_ok && std::abs(dot(dF, z - zp)) <= 1e-12 * (1 + norm(z - zp) * norm(z - zp));
      op_ok = op_ok && norm(dF) <= (F.lipschitz() + 1e-9) * norm(z - zp);
    }
  }
  if (!op_ok) failed.emplace_back("operator");

  // gap suites
  const auto p = toy_problem(0.01);
  bool gap_ok = true;
  for (GapKind kind : {GapKind::Minimax, GapKind::VI}) {
    const GapEvaluator exact(p, kB, kind);
    const GapEvaluator grid(p, kB, kind, GapMethod::Grid, 21);
    gap_ok = gap_ok && std::abs(exact(Point{0, 0}).value()) <= 1e-12;
    for (int t = 0; t < 1000; ++t) {
      const Point w{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      gap_ok = gap_ok && exact(w).value() >= 0.0 && grid(w).value() >= 0.0;
      gap_ok = gap_ok && std::abs(exact(w).value() - oracles::toy_gap(0.01, w[0], w[1])) <= 1e-12;
    }
  }
  if (!gap_ok) failed.emplace_back("gap");

  double consistency = 0.0;
  bool grid_ok = true;
  for (int t = 0; t < 10; ++t) {
    const Point w{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double diff = GapEvaluator(p, kB)(w).value() -
                        grid_gap_oracle(p, kB, w, 2001, GapKind::Minimax).value();
    grid_ok = grid_ok && diff >= 0.0 && diff <= 5e-3;
    consistency = std::max(consistency, diff);
  }
  if (!grid_ok) failed.emplace_back("grid");

  // ergodic inequality on completed traces
  bool lemma_ok = true;
  for (Method m : {Method::FBF, Method::FBFp}) {
    for (auto sched : {StepSchedule::constant(m == Method::FBF ? 1.0 : 0.5),
                       StepSchedule::inverse_sqrt(m == Method::FBF ? 1.0 : 0.5)}) {
      RunOptions o;
      o.stride = 1;
      const auto t = run({m}, p, kZ0, sched, 2000, 0, o);
      ErgodicGBound acc(p, kB);
      const GapEvaluator vi(p, kB, GapKind::VI);
      for (const auto& r : t.records) {
        acc.add(r.w, r.alpha);
        lemma_ok = lemma_ok && acc.supremum().value() >= vi(r.wbar).value() - 1e-12;
      }
      for (const Point& z : kB.corners()) {
        lemma_ok = lemma_ok &&
                   acc.average_at(z).value() >= gap_integrand(p, GapKind::VI, t.final_wbar, z).value() - 1e-12;
      }
    }
  }
  if (!lemma_ok) failed.emplace_back("ergodic");

  Outcome o;
  o.pass = failed.empty();
  o.detail = "prox/operator/gap/grid/ergodic suites; grid gap deficit max " + fmt("%.2e", consistency);
  for (const auto& f : failed) o.detail += ", FAILED " + f;
  return o;
}

Outcome c10() {
  const auto p = toy_problem(0.01);
  bool ok = true;
  std::string detail;
  for (std::size_t K : {1u, 10u, 1000u, 10000u}) {
    const auto fbf = run({Method::FBF}, p, kZ0, StepSchedule::constant(1.0), K, 0).oracle_calls;
    const auto eg = run({Method::EG}, p, kZ0, StepSchedule::constant(1.0), K, 0).oracle_calls;
    const auto fbfp = run({Method::FBFp}, p, kZ0, StepSchedule::constant(0.5), K, 0).oracle_calls;
    const auto egp = run({Method::EGp}, p, kZ0, StepSchedule::constant(0.5), K, 0).oracle_calls;
    ok = ok && fbf == 2 * K && eg == 2 * K && fbfp == K + 1 && egp == K + 1;
    if (K == 10000) {
      detail = "K=10000: FBF " + std::to_string(fbf) + ", EG " + std::to_string(eg) + ", FBFp " +
               std::to_string(fbfp) + ", EGp " + std::to_string(egp);
    }
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"deterministic FBF bound 4/K on the toy problem", c1},
      {"deterministic FBFp bound 8/K on the toy problem", c2},
      {"deterministic rate slope in [-1.25, -0.75]", c3},
      {"stochastic FBF mean gap within bound + 2 SE", c4},
      {"stochastic FBFp mean gap within bound + 2 SE, refined regime", c5},
      {"stochastic rate slope in [-0.65, -0.35]", c6},
      {"FBF/EG, FBFp/reflected, FBFp/OGDA equivalence", c7},
      {"GDA divergence law and PGDA non-convergence", c8},
      {"property suites", c9},
      {"oracle-call accounting", c10},
  };
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s  criterion %zu: %s | %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
