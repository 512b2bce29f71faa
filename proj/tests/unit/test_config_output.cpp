#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "qdiscrim/config.hpp"
#include "qdiscrim/output.hpp"
#include "qdiscrim/rng.hpp"

using namespace qdiscrim;
using nlohmann::json;

namespace {

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("default config is the two-frequency qubit example") {
  const LoadedConfig cfg = default_config();
  const ExperimentConfig& ex = cfg.experiment;
  CHECK((ex.pair.model0.hamiltonian - build_hamiltonian(1.0, 1.43)).max_abs() == 0.0);
  CHECK((ex.pair.model1.hamiltonian - build_hamiltonian(2.0, 1.43)).max_abs() == 0.0);
  CHECK((ex.pair.model0.measurement - pauli(PauliAxis::z)).max_abs() == 0.0);
  CHECK(ex.pair.model0.eta == 0.5);
  CHECK(ex.pair.model0.scaling == DissipatorScaling::eta_scaled);
  CHECK(ex.pair.model0.ordering == Ordering::paper_ffdag);
  CHECK(density_to_bloch(ex.rho0).z == 1.0);
  CHECK(ex.pair.prior0 == 0.5);
  CHECK(ex.grid.dt() == 1e-3);
  CHECK(ex.grid.n_steps() == 30000);
  CHECK(ex.base_seed == 42);
  CHECK(ex.beta == 0.01);
  CHECK(ex.estimator == Estimator::posterior);
  CHECK(ex.loglik_mode == LoglikMode::ito_corrected);
}

TEST_CASE("shipped config file matches the built-in defaults") {
  const LoadedConfig file = load_config(QDISCRIM_SOURCE_DIR "/configs/default.json");
  CHECK(file.resolved == default_config().resolved);
}

TEST_CASE("overrides") {
  const LoadedConfig cfg = default_config({"sim.dt=5e-4", "measurement.ordering=standard_FdagF"});
  CHECK(cfg.experiment.grid.dt() == 5e-4);
  CHECK(cfg.experiment.pair.model1.ordering == Ordering::standard_fdagf);
  const json manifest = manifest_echo(cfg, "qe");
  CHECK(manifest["_manifest"]["overrides"] == json::array({"sim.dt=5e-4", "measurement.ordering=standard_FdagF"}));
  CHECK(manifest["_manifest"]["command"] == "qe");
  CHECK(manifest["sim"]["dt"] == 5e-4);
}

TEST_CASE("validation errors name the offending key") {
  CHECK(error_of([] { default_config({"measurement.eta=1.5"}); }).find("measurement.eta") != std::string::npos);
  CHECK(error_of([] { default_config({"priors.p0=0.7"}); }).find("priors") != std::string::npos);
  CHECK(error_of([] { default_config({"sim.dt=-1"}); }).find("sim.dt") != std::string::npos);
  CHECK(error_of([] { default_config({"sim.loglik_mode=bogus"}); }).find("sim.loglik_mode") != std::string::npos);
  CHECK(error_of([] { default_config({"model0.gamma=1"}); }).find("model0.gamma") != std::string::npos);
  CHECK(error_of([] { default_config({"nosuch.key=1"}); }).find("nosuch") != std::string::npos);
  CHECK(error_of([] { default_config({"no_equals_sign"}); }) != "");
  CHECK(error_of([] { default_config({"initial_state.z=1.5"}); }) != "");
  CHECK(error_of([] { default_config({"experiment.workers=0"}); }).find("experiment.workers") !=
        std::string::npos);
  CHECK(error_of([] { parse_config("{\n  \"sim\": {\n    \"dt\": ,\n  }\n}"); }).find("line 3") !=
        std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("partial config files inherit defaults") {
  const LoadedConfig cfg = parse_config(R"({"model1": {"omega": 3.0}, "experiment": {"n_trials": 7}})");
  CHECK((cfg.experiment.pair.model1.hamiltonian - build_hamiltonian(3.0, 1.43)).max_abs() == 0.0);
  CHECK(cfg.experiment.n_trials == 7);
  CHECK(cfg.experiment.grid.n_steps() == 30000);
}

TEST_CASE("manifest echo reloads to the same configuration") {
  const LoadedConfig cfg = default_config({"sim.seed=7", "priors.p0=0.25", "priors.p1=0.75"});
  const LoadedConfig again = parse_config(manifest_echo(cfg, "discriminate").dump());
  CHECK(again.resolved == cfg.resolved);
  CHECK(again.experiment.base_seed == 7);
  CHECK(again.experiment.pair.prior1 == 0.75);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.0, 1.0, -0.1, 1e-300, 3.141592653589793, 0.1 + 0.2, 123456789.123}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_optional(std::nullopt) == "");
}

TEST_CASE("qe and bench CSV layout") {
  QeCurve curve;
  curve.times = {0.0, 0.5};
  curve.qe = {0.5, 0.25};
  curve.std_error = {0.0, 0.125};
  curve.n_trials = 4;
  std::ostringstream qe;
  write_qe_csv(qe, curve);
  const auto q = lines_of(qe.str());
  REQUIRE(q.size() == 4);
  CHECK(q[0].rfind("# qdiscrim qe schema v1", 0) == 0);
  CHECK(q[1] == "time,qe,stderr,n_trials,estimator");
  CHECK(q[2] == "0,0.5,0,4,posterior");
  CHECK(q[3] == "0.5,0.25,0.125,4,posterior");

  BenchTable table = {{1, Estimator::posterior, std::nullopt, 0.25, 42},
                      {10, Estimator::counting, 12.5, 1.5, 42}};
  std::ostringstream bench;
  write_bench_csv(bench, table);
  const auto b = lines_of(bench.str());
  REQUIRE(b.size() == 4);
  CHECK(b[1] == "n_trials,estimator,first_passage_time,wall_clock_seconds,seed");
  CHECK(b[2] == "1,posterior,,0.25,42");
  CHECK(b[3] == "10,counting,12.5,1.5,42");
}

TEST_CASE("trajectory and discriminate CSV layout") {
  ExperimentConfig cfg = default_config({"sim.t_max=0.01"}).experiment;
  TrialTrace trace;
  const TrialResult r = run_trial(cfg, 0, &trace);
  std::ostringstream disc;
  write_discriminate_csv(disc, cfg.grid, r, trace);
  const auto d = lines_of(disc.str());
  REQUIRE(d.size() == cfg.grid.n_points() + 2);
  CHECK(d[1] == "time,x0,y0,z0,x1,y1,z1,loglik0,loglik1,log_ratio,p0,p1,cond_error,decision");
  CHECK(d[2] == "0,0,0,1,0,0,1,0,0,0,0.5,0.5,0.5,H1");

  Rng rng(1);
  const auto sim = simulate_record(cfg.pair.model0, cfg.rho0, cfg.grid, [&](double dt) { return rng.wiener(dt); });
  std::ostringstream traj;
  write_trajectory_csv(traj, sim);
  const auto t = lines_of(traj.str());
  REQUIRE(t.size() == cfg.grid.n_points() + 2);
  CHECK(t[1] == "time,x,y,z,dY");
  CHECK(t[2] == "0,0,0,1,");
  CHECK(t[3].substr(t[3].rfind(',') + 1) == format_double(sim.record.dY[0]));
}
