// qdiscrim: binary parameter discrimination for continuously monitored qubits.
//
//   qdiscrim simulate      truth trajectory and measurement record
//   qdiscrim discriminate  single-trial posteriors and decisions
//   qdiscrim qe            average error probability curve
//   qdiscrim bench         wall-clock comparison of the two Qe estimators
//   qdiscrim validate      runtime invariant suite

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "qdiscrim/config.hpp"
#include "qdiscrim/output.hpp"
#include "qdiscrim/rng.hpp"
#include "qdiscrim/validation.hpp"

namespace fs = std::filesystem;
using namespace qdiscrim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidationFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = "out";
  int workers = 0;

  std::string estimator;
  std::size_t n_trials = 0;
  std::size_t trial = 0;
  std::string hypothesis = "H0";
  std::string n_list = "1,10,20,50,100";
  int repeats = 3;
};

/// Folds command-line flags into overrides so the manifest records them.
/// Precedence for workers: flag > QDISCRIM_WORKERS > file.
std::vector<std::string> effective_overrides(const Options& opt) {
  std::vector<std::string> out = opt.overrides;
  if (opt.workers > 0) {
    out.push_back("experiment.workers=" + std::to_string(opt.workers));
  } else if (const char* env = std::getenv("QDISCRIM_WORKERS"); env != nullptr && *env != '\0') {
    out.push_back(std::string("experiment.workers=") + env);
  }
  if (!opt.estimator.empty()) out.push_back("experiment.estimator=\"" + opt.estimator + "\"");
  if (opt.n_trials > 0) out.push_back("experiment.n_trials=" + std::to_string(opt.n_trials));
  return out;
}

LoadedConfig load(const Options& opt) {
  const auto overrides = effective_overrides(opt);
  return opt.config_path.empty() ? default_config(overrides) : load_config(opt.config_path, overrides);
}

std::ofstream open_output(const Options& opt, const std::string& name) {
  fs::create_directories(opt.out_dir);
  const fs::path path = fs::path(opt.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_manifest(const Options& opt, const LoadedConfig& cfg, const std::string& command) {
  open_output(opt, "manifest.json") << manifest_echo(cfg, command).dump(2) << '\n';
}

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("--n-list entries must be positive integers, got '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--n-list must not be empty");
  return out;
}

int cmd_simulate(const Options& opt) {
  const LoadedConfig cfg = load(opt);
  const ExperimentConfig& ex = cfg.experiment;
  if (opt.hypothesis != "H0" && opt.hypothesis != "H1") {
    throw ConfigError("--hypothesis must be H0 or H1");
  }
  const ModelSpec& model = opt.hypothesis == "H0" ? ex.pair.model0 : ex.pair.model1;
  Rng rng(trial_seed(ex.base_seed, opt.trial));
  const SimulationResult sim =
      simulate_record(model, ex.rho0, ex.grid, [&](double dt) { return rng.wiener(dt); });
  write_manifest(opt, cfg, "simulate");
  auto out = open_output(opt, "trajectory.csv");
  write_trajectory_csv(out, sim);
  std::cerr << "simulate: " << ex.grid.n_steps() << " steps under " << opt.hypothesis << ", "
            << sim.truth.repairs << " positivity repairs\n";
  return kExitOk;
}

int cmd_discriminate(const Options& opt) {
  const LoadedConfig cfg = load(opt);
  const ExperimentConfig& ex = cfg.experiment;
  TrialTrace trace;
  const TrialResult r = run_trial(ex, opt.trial, &trace);
  write_manifest(opt, cfg, "discriminate");
  auto out = open_output(opt, "discriminate.csv");
  write_discriminate_csv(out, ex.grid, r, trace);
  std::cerr << "discriminate: truth " << to_string(r.truth) << ", accepted "
            << to_string(r.final_decision.accepted) << ", p0(T)=" << r.posterior_path.back().p0
            << ", stop time " << (r.stop_time ? format_double(*r.stop_time) : "none") << ", "
            << r.repair_count << " repairs\n";
  return kExitOk;
}

int cmd_qe(const Options& opt) {
  const LoadedConfig cfg = load(opt);
  const ExperimentConfig& ex = cfg.experiment;
  const QeCurve curve = ex.estimator == Estimator::posterior ? estimate_qe_posterior(ex)
                                                             : estimate_qe_counting(ex).curve;
  write_manifest(opt, cfg, "qe");
  auto out = open_output(opt, std::string("qe_") + to_string(ex.estimator) + ".csv");
  write_qe_csv(out, curve);
  const auto passage = first_passage(curve, ex.beta);
  std::cerr << "qe: " << to_string(ex.estimator) << ", N=" << curve.n_trials << ", Qe(T)="
            << curve.qe.back() << ", first passage below beta="
            << (passage ? format_double(*passage) : "none") << '\n';
  return kExitOk;
}

int cmd_bench(const Options& opt) {
  const LoadedConfig cfg = load(opt);
  const auto n_list = parse_list(opt.n_list);
  const BenchTable table = bench(cfg.experiment, n_list, opt.repeats);
  write_manifest(opt, cfg, "bench");
  auto out = open_output(opt, "bench.csv");
  write_bench_csv(out, table);
  write_bench_csv(std::cout, table);
  return kExitOk;
}

int cmd_validate(const Options& opt) {
  const LoadedConfig cfg = load(opt);
  bool all = true;
  for (const CheckResult& c : run_invariant_suite(cfg.experiment)) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    all = all && c.passed;
  }
  std::cout << (all ? "all invariants hold\n" : "invariant suite FAILED\n");
  return all ? kExitOk : kExitValidationFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary discrimination of qubit parameters under continuous weak measurement"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config_path, "JSON config file (defaults built in)")
        ->check(CLI::ExistingFile);
    sub->add_option("-s,--set", opt.overrides, "Override, e.g. sim.dt=5e-4 (repeatable)");
    sub->add_option("-o,--out", opt.out_dir, "Output directory")->capture_default_str();
    sub->add_option("-w,--workers", opt.workers, "Worker threads (overrides QDISCRIM_WORKERS)")
        ->check(CLI::PositiveNumber);
  };

  auto* simulate = app.add_subcommand("simulate", "Truth trajectory and measurement record CSV");
  add_common(simulate);
  simulate->add_option("--hypothesis", opt.hypothesis, "Generating model: H0 or H1")
      ->capture_default_str();
  simulate->add_option("--trial", opt.trial, "Trial index selecting the noise stream");

  auto* discriminate = app.add_subcommand("discriminate", "Single-trial posterior/decision CSV");
  add_common(discriminate);
  discriminate->add_option("--trial", opt.trial, "Trial index");

  auto* qe = app.add_subcommand("qe", "Average error probability curve CSV");
  add_common(qe);
  qe->add_option("--estimator", opt.estimator, "posterior or counting")
      ->check(CLI::IsMember({"posterior", "counting"}));
  qe->add_option("-n,--n", opt.n_trials, "Number of trials")->check(CLI::PositiveNumber);

  auto* bench_cmd = app.add_subcommand("bench", "Estimator wall-clock comparison CSV");
  add_common(bench_cmd);
  bench_cmd->add_option("--n-list", opt.n_list, "Comma-separated trial counts")
      ->capture_default_str();
  bench_cmd->add_option("--repeats", opt.repeats, "Timing repeats per row (median reported)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Run the invariant suite");
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(opt);
    if (discriminate->parsed()) return cmd_discriminate(opt);
    if (qe->parsed()) return cmd_qe(opt);
    if (bench_cmd->parsed()) return cmd_bench(opt);
    if (validate->parsed()) return cmd_validate(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}
