#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>
#include <string>

#include "fbfkit/harness.hpp"

namespace py = pybind11;
using namespace fbfkit;

namespace {

py::object extended(const ExtendedReal& v) { return py::float_(v.to_double()); }

py::dict trace_dict(const SolverTrace& t) {
  const auto n = static_cast<Eigen::Index>(t.records.size());
  const auto m = n > 0 ? static_cast<Eigen::Index>(t.records.front().w.size()) : 0;
  Eigen::MatrixXd w(n, m);
  Eigen::MatrixXd z(n, m);
  Eigen::MatrixXd wbar(n, m);
  Eigen::VectorXd alpha(n);
  Eigen::VectorXd calls(n);
  std::vector<std::size_t> iters;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = t.records[static_cast<std::size_t>(i)];
    w.row(i) = r.w.vec();
    z.row(i) = r.z.vec();
    wbar.row(i) = r.wbar.vec();
    alpha[i] = r.alpha;
    calls[i] = static_cast<double>(r.oracle_calls);
    iters.push_back(r.k + 1);
  }
  py::dict d;
  d["iter"] = iters;
  d["w"] = w;
  d["z"] = z;
  d["wbar"] = wbar;
  d["alpha"] = alpha;
  d["oracle_calls"] = calls;
  d["final_wbar"] = t.final_wbar.vec();
  d["total_oracle_calls"] = t.oracle_calls;
  d["warnings"] = t.metadata.warnings;
  d["step_cap_exceeded"] = t.metadata.step_cap_exceeded;
  return d;
}

py::object json_to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

json py_to_json(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

SolverKind make_kind(const std::string& method, bool stochastic, const std::string& pgda,
                     bool refined) {
  SolverKind k;
  k.method = method_from_string(method);
  k.mode = stochastic ? Mode::Stochastic : Mode::Deterministic;
  if (pgda == "simultaneous") {
    k.pgda = PgdaVariant::Simultaneous;
  } else if (pgda != "alternating") {
    throw ConfigError("unknown pgda variant '" + pgda + "'");
  }
  k.regime = refined ? StepRegime::Refined : StepRegime::Standard;
  k.validate();
  return k;
}

}  // namespace

PYBIND11_MODULE(_fbfkit, m) {
  m.doc() = "Forward-backward-forward and related solvers for regularized monotone inclusions.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
  py::register_exception<FitError>(m, "FitError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<CapabilityError>(m, "CapabilityError", base.ptr());
  py::register_exception<NonFiniteError>(m, "NonFiniteError", base.ptr());
  py::register_exception<DegenerateSetError>(m, "DegenerateSetError", base.ptr());
  py::register_exception<ZeroOperatorError>(m, "ZeroOperatorError", base.ptr());

  py::class_<CompactBox>(m, "Box")
      .def(py::init([](const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
             return CompactBox(Point(lo), Point(hi));
           }),
           py::arg("lower"), py::arg("upper"))
      .def_static("cube", &CompactBox::cube, py::arg("m"), py::arg("lo"), py::arg("hi"))
      .def_property_readonly("lower", [](const CompactBox& b) { return b.lower().vec(); })
      .def_property_readonly("upper", [](const CompactBox& b) { return b.upper().vec(); })
      .def_property_readonly("diameter", &CompactBox::diameter)
      .def("contains", [](const CompactBox& b, const Eigen::VectorXd& w) { return b.contains(Point(w)); });

  py::class_<ProblemInstance>(m, "Problem")
      .def_property_readonly("dimension", &ProblemInstance::dimension)
      .def_readonly("L", &ProblemInstance::L)
      .def_readonly("sigma", &ProblemInstance::sigma)
      .def_readonly("id", &ProblemInstance::id)
      .def("F", [](const ProblemInstance& p, const Eigen::VectorXd& w) { return p.F->eval(Point(w)).vec(); },
           py::arg("w"))
      .def("r", [](const ProblemInstance& p, const Eigen::VectorXd& w) { return extended(p.r->value(Point(w))); },
           py::arg("w"))
      .def("prox", [](const ProblemInstance& p, double lambda, const Eigen::VectorXd& w) {
             return p.r->prox(lambda, Point(w)).vec();
           },
           py::arg("lam"), py::arg("w"));

  m.def("toy_problem", &toy_problem, py::arg("kappa") = 0.01, py::arg("sigma") = 0.0,
        "min_x max_{|y|<=1} kappa|x| + xy");

  m.def("problem_from_json",
        [](const py::object& spec) {
          const json j = py_to_json(spec);
          check_keys(j, {"operator", "regularizer", "sigma", "id"}, "problem");
          auto F = operator_from_json(j.at("operator"));
          auto r = j.contains("regularizer") ? regularizer_from_json(j.at("regularizer"), F->split())
                                             : std::make_shared<ZeroRegularizer>();
          return ProblemInstance(F, r, j.value("sigma", 0.0), j.value("id", std::string("custom")));
        },
        py::arg("spec"), "Build a problem from the same JSON layout as the config 'problem' field.");

  m.def("lipschitz_estimate",
        [](const Eigen::MatrixXd& A) { return lipschitz_estimate(BilinearSaddleOperator(A)); },
        py::arg("A"));
  m.def("spectral_norm", &spectral_norm, py::arg("M"));

  m.def("run",
        [](const ProblemInstance& p, const Eigen::VectorXd& z0, const std::string& method,
           double alpha, std::size_t K, const std::string& schedule, bool stochastic,
           std::uint64_t seed, std::size_t stride, const std::string& pgda, bool refined) {
          const SolverKind kind = make_kind(method, stochastic, pgda, refined);
          StepSchedule sched = StepSchedule::constant(alpha);
          if (schedule == "inverse_sqrt") {
            sched = StepSchedule::inverse_sqrt(alpha);
          } else if (schedule != "constant") {
            throw ConfigError("unknown schedule '" + schedule + "'");
          }
          RunOptions opts;
          opts.stride = stride;
          SolverTrace t;
          {
            py::gil_scoped_release release;
            t = run(kind, p, Point(z0), sched, K, seed, opts);
          }
          return trace_dict(t);
        },
        py::arg("problem"), py::arg("z0"), py::arg("method") = "fbf", py::arg("alpha") = 1.0,
        py::arg("K") = 1000, py::arg("schedule") = "constant", py::arg("stochastic") = false,
        py::arg("seed") = 0, py::arg("stride") = 1, py::arg("pgda") = "alternating",
        py::arg("refined") = false);

  m.def("gap",
        [](const ProblemInstance& p, const CompactBox& box, const Eigen::VectorXd& w,
           const std::string& kind, const std::string& method, std::size_t ppa) {
          GapMethod gm = GapMethod::ClosedForm;
          if (method == "grid") {
            gm = GapMethod::Grid;
          } else if (method != "closed_form") {
            throw ConfigError("unknown gap method '" + method + "'");
          }
          GapKind gk = GapEvaluator::default_kind(p);
          if (kind == "vi") {
            gk = GapKind::VI;
          } else if (kind == "minimax") {
            gk = GapKind::Minimax;
          } else if (kind != "auto") {
            throw ConfigError("unknown gap kind '" + kind + "'");
          }
          return extended(GapEvaluator(p, box, gk, gm, ppa)(Point(w)));
        },
        py::arg("problem"), py::arg("box"), py::arg("w"), py::arg("kind") = "auto",
        py::arg("method") = "closed_form", py::arg("points_per_axis") = 201);

  m.def("fit_rate",
        [](const std::vector<double>& K, const std::vector<double>& gap, double kmin, double kmax) {
          if (K.size() != gap.size()) throw DimensionError("K and gap differ in length");
          std::vector<std::pair<double, double>> s;
          for (std::size_t i = 0; i < K.size(); ++i) s.emplace_back(K[i], gap[i]);
          const RateFit f = fit_rate(s, kmin, kmax);
          py::dict d;
          d["slope"] = f.slope;
          d["intercept"] = f.intercept;
          d["r_squared"] = f.r_squared;
          d["points"] = f.points;
          return d;
        },
        py::arg("K"), py::arg("gap"), py::arg("kmin"), py::arg("kmax"));

  m.def("run_experiment",
        [](const py::object& config, std::uint64_t seed, const std::filesystem::path& out) {
          const ExperimentConfig cfg = parse_config(py_to_json(config));
          ExperimentSummary s;
          {
            py::gil_scoped_release release;
            s = run_experiment(cfg, seed, out);
          }
          return json_to_py(to_json(s));
        },
        py::arg("config"), py::arg("seed") = 0, py::arg("out") = std::filesystem::path());

  m.def("expectation_sweep",
        [](const py::object& config, std::uint64_t seed, const std::filesystem::path& out) {
          const ExperimentConfig cfg = parse_config(py_to_json(config));
          SweepResult r;
          {
            py::gil_scoped_release release;
            r = expectation_sweep(cfg, seed, out);
          }
          return json_to_py(to_json(r));
        },
        py::arg("config"), py::arg("seed") = 0, py::arg("out") = std::filesystem::path());

  m.def("compare_methods",
        [](const py::list& configs, std::uint64_t seed, const std::filesystem::path& out) {
          std::vector<ExperimentConfig> cfgs;
          for (const auto& c : configs) cfgs.push_back(parse_config(py_to_json(py::reinterpret_borrow<py::object>(c))));
          CompareResult r;
          {
            py::gil_scoped_release release;
            r = compare_methods(cfgs, seed, out);
          }
          py::object d = json_to_py(to_json(r));
          d["table"] = format_table(r);
          return d;
        },
        py::arg("configs"), py::arg("seed") = 0, py::arg("out") = std::filesystem::path());

  m.attr("SUMMARY_SCHEMA_VERSION") = kSummarySchemaVersion;
}
