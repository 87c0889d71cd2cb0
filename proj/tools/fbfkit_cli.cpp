// fbfkit command-line front end.
//
//   fbfkit_cli solve   --config run.json [--seed N] [--out DIR] [--strict]
//   fbfkit_cli sweep   --config run.json [--seed N] [--out DIR] [--strict]
//   fbfkit_cli compare --config a.json --config b.json [--out DIR]
//   fbfkit_cli rate    --csv trace.csv --kmin 100 --kmax 10000
//   fbfkit_cli toy     [--kappa 0.01] [--K 10000] [--out DIR]

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fbfkit/harness.hpp"

namespace fs = std::filesystem;
using namespace fbfkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitViolation = 4;

fs::path output_dir(const std::string& flag, const ExperimentConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.output.empty()) return cfg.output;
  return "fbfkit_out";
}

void print_summary(const ExperimentSummary& s) {
  for (const auto& r : s.runs) {
    std::cout << r.method << " seed=" << r.seed << " status=" << r.status
              << " K=" << r.iterations << " calls=" << r.oracle_calls;
    if (!r.row_gap.empty()) std::cout << " gap=" << format_double(r.row_gap.back());
    std::cout << " bound=" << to_string(r.bound.kind) << " violations=" << r.bound.violations;
    if (r.rate) std::cout << " slope=" << format_double(r.rate->slope);
    std::cout << '\n';
    for (const auto& w : r.warnings) std::cout << "  warning: " << w << '\n';
    if (!r.error.empty()) std::cout << "  error: " << r.error << '\n';
  }
}

void write_gnuplot(const fs::path& dir, const std::vector<std::string>& names,
                   const std::vector<fs::path>& csvs) {
  std::ofstream gp(dir / "toy.gp");
  gp << "set datafile separator ','\n"
        "set logscale xy\n"
        "set xlabel 'iteration K'\n"
        "set ylabel 'restricted gap of the ergodic average'\n"
        "set key bottom left\n"
        "set terminal pngcairo size 900,600\n"
        "set output 'toy.png'\n"
        "plot ";
  for (std::size_t i = 0; i < csvs.size(); ++i) {
    if (i) gp << ", \\\n     ";
    gp << "'" << csvs[i].filename().string() << "' using 'iter':'gap_wbar' with lines title '"
       << names[i] << "'";
  }
  gp << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-order solvers for regularized monotone inclusions"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::uint64_t seed = 0;
  std::string out;
  bool strict = false;

  auto* solve = app.add_subcommand("solve", "Run one configuration, one trace per seed");
  solve->add_option("--config", configs, "JSON configuration")->required()->expected(1);
  solve->add_option("--seed", seed, "Master seed");
  solve->add_option("--out", out, "Output directory");
  solve->add_flag("--strict", strict, "Exit with status 4 on a bound violation");

  auto* sweep = app.add_subcommand("sweep", "Seed-mean gap with standard errors");
  sweep->add_option("--config", configs, "JSON configuration")->required()->expected(1);
  sweep->add_option("--seed", seed, "Master seed");
  sweep->add_option("--out", out, "Output directory");
  sweep->add_flag("--strict", strict, "Exit with status 4 on a bound violation");

  auto* compare = app.add_subcommand("compare", "Compare methods on one problem");
  compare->add_option("--config", configs, "JSON configuration (repeat)")->required();
  compare->add_option("--seed", seed, "Master seed");
  compare->add_option("--out", out, "Output directory");
  compare->add_flag("--strict", strict, "Exit with status 4 on a bound violation");

  std::string csv;
  double kmin = 0.0;
  double kmax = 0.0;
  std::string column = "gap_wbar";
  auto* rate = app.add_subcommand("rate", "Log-log least-squares rate of a trace");
  rate->add_option("--csv", csv, "Trace CSV")->required();
  rate->add_option("--kmin", kmin, "Window start")->required();
  rate->add_option("--kmax", kmax, "Window end")->required();
  rate->add_option("--column", column, "Gap column");

  double kappa = 0.01;
  std::size_t toy_K = 10000;
  auto* toy = app.add_subcommand("toy", "Built-in regularized bilinear toy problem, all methods");
  toy->add_option("--kappa", kappa, "L1 weight on x")->capture_default_str();
  toy->add_option("--K", toy_K, "Iterations")->capture_default_str();
  toy->add_option("--seed", seed, "Master seed");
  toy->add_option("--out", out, "Output directory");
  toy->add_flag("--strict", strict, "Exit with status 4 on a bound violation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      const ExperimentConfig cfg = load_config(configs.front());
      const fs::path dir = output_dir(out, cfg);
      const ExperimentSummary s = run_experiment(cfg, seed, dir);
      print_summary(s);
      std::cout << "wrote " << dir.string() << '\n';
      if (s.any_diverged()) return kExitDivergence;
      if (strict && s.total_violations() > 0) return kExitViolation;
      return kExitOk;
    }
    if (*sweep) {
      const ExperimentConfig cfg = load_config(configs.front());
      const fs::path dir = output_dir(out, cfg);
      const SweepResult r = expectation_sweep(cfg, seed, dir);
      std::cout << "seeds=" << r.seeds << " checkpoints=" << r.points.size()
                << " bound=" << to_string(r.report.kind) << " violations=" << r.report.violations;
      if (!r.points.empty()) std::cout << " mean_gap=" << format_double(r.points.back().mean_gap);
      if (r.rate) std::cout << " slope=" << format_double(r.rate->slope);
      std::cout << "\nwrote " << dir.string() << '\n';
      if (strict && r.report.violations > 0) return kExitViolation;
      return kExitOk;
    }
    if (*compare) {
      std::vector<ExperimentConfig> cfgs;
      for (const auto& c : configs) cfgs.push_back(load_config(c));
      const fs::path dir = output_dir(out, cfgs.front());
      const CompareResult r = compare_methods(cfgs, seed, dir);
      std::cout << format_table(r);
      std::cout << "wrote " << dir.string() << '\n';
      for (const auto& row : r.rows) {
        if (row.status != "ok") return kExitDivergence;
      }
      if (strict) {
        for (const auto& row : r.rows) {
          if (row.violations > 0) return kExitViolation;
        }
      }
      return kExitOk;
    }
    if (*rate) {
      const RateFit f = fit_rate_csv(csv, kmin, kmax, column);
      std::cout << "slope=" << format_double(f.slope) << " intercept=" << format_double(f.intercept)
                << " r_squared=" << format_double(f.r_squared) << " points=" << f.points << '\n';
      return kExitOk;
    }
    if (*toy) {
      const fs::path dir = out.empty() ? fs::path("toy_out") : fs::path(out);
      std::vector<ExperimentConfig> cfgs;
      for (Method m : {Method::FBF, Method::FBFp, Method::EG, Method::EGp, Method::PGDA}) {
        cfgs.push_back(toy_config(m, kappa, toy_K));
      }
      const CompareResult r = compare_methods(cfgs, seed, dir);
      std::cout << format_table(r);
      std::vector<std::string> names;
      std::vector<fs::path> csvs;
      for (const auto& s : r.runs) {
        names.push_back(s.runs.front().method);
        csvs.push_back(s.runs.front().csv);
      }
      write_gnuplot(dir, names, csvs);
      std::cout << "wrote " << dir.string() << " (plot with: gnuplot toy.gp)\n";
      if (strict) {
        for (const auto& row : r.rows) {
          if (row.violations > 0) return kExitViolation;
        }
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
