#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracle.hpp"
#include "qdiscrim/rng.hpp"
#include "qdiscrim/trajectory.hpp"

using namespace qdiscrim;

namespace {

ModelSpec bare_sigma_z(double eta) {
  ModelSpec m;
  m.hamiltonian = Operator::zero(2);
  m.measurement = pauli(PauliAxis::z);
  m.eta = eta;
  return m;
}

NoiseSource zero_noise() {
  return [](double) { return 0.0; };
}

NoiseSource gaussian(std::uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng](double dt) { return rng->wiener(dt); };
}

double op_distance(const Operator& a, const Operator& b) { return (a - b).max_abs(); }

}  // namespace

TEST_CASE("ModelSpec validation") {
  CHECK_NOTHROW(ModelSpec::two_level(1, 1.43, 1, 0.5).validate());
  CHECK_THROWS_AS(ModelSpec::two_level(1, 1.43, 1, 0.0).validate(), ConfigError);
  CHECK_THROWS_AS(ModelSpec::two_level(1, 1.43, 1, 1.5).validate(), ConfigError);
  CHECK_THROWS_AS(ModelSpec::two_level(1, 1.43, -1, 0.5).validate(), ConfigError);
}

TEST_CASE("SimGrid") {
  const SimGrid g = SimGrid::make(1e-3, 30.0);
  CHECK(g.n_steps() == 30000);
  CHECK(g.n_points() == 30001);
  CHECK(g.index_of(10.0) == 10000);
  CHECK(g.time(5000) == doctest::Approx(5.0));
  CHECK(SimGrid::from_steps(1e-3, 0).n_points() == 1);
  CHECK_THROWS_AS(SimGrid::make(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(SimGrid::make(1e-3, -1.0), ConfigError);
}

TEST_CASE("step_normalized fixed points") {
  const ModelSpec model = bare_sigma_z(0.5);
  const DensityState north = bloch_to_density({0, 0, 1});
  for (double dW : {-0.3, 0.0, 0.01, 1.7}) {
    CHECK(op_distance(step_normalized(north, model, 1e-3, dW).op, north.op) <= 1e-12);
  }
  const DensityState mixed = bloch_to_density({0, 0, 0});
  CHECK(op_distance(step_normalized(mixed, model, 1e-3, 0.0).op, mixed.op) <= 1e-12);
}

TEST_CASE("step_normalized one step from the mixed state") {
  const DensityState next = step_normalized(bloch_to_density({0, 0, 0}), bare_sigma_z(0.5), 1e-3, 0.01);
  oracle::TwoLevel m{0.0, 0.0, 1.0, 0.5};
  const oracle::Bloch ref = oracle::step(m, {0, 0, 0}, 1e-3, 0.01);
  CHECK(std::abs(ref.z - 0.0141421) <= 1e-7);
  const BlochVector got = density_to_bloch(next);
  CHECK(std::abs(got.z - 0.0141421) <= 1e-7);
  CHECK(std::abs(got.z - ref.z) <= 1e-15);
  CHECK(std::abs(got.x) <= 1e-15);
  CHECK(std::abs(got.y) <= 1e-15);
}

TEST_CASE("step_normalized rejects non-finite noise") {
  const DensityState rho = bloch_to_density({0, 0, 1});
  CHECK_THROWS_AS(step_normalized(rho, bare_sigma_z(0.5), 1e-3, std::nan("")), NumericalError);
}

TEST_CASE("step_normalized matches the Bloch-coordinate oracle along a trajectory") {
  for (bool unit : {false, true}) {
    const ModelSpec model = ModelSpec::two_level(
        2.0, 1.43, 1.0, 0.5, unit ? DissipatorScaling::unit : DissipatorScaling::eta_scaled);
    const oracle::TwoLevel ref_model{2.0, 1.43, 1.0, 0.5, unit};
    Rng rng(99);
    DensityState rho = bloch_to_density({0, 0, 1});
    oracle::Bloch ref{0, 0, 1};
    double worst = 0.0;
    for (int k = 0; k < 5000; ++k) {
      const double dW = rng.wiener(1e-3);
      rho = step_normalized(rho, model, 1e-3, dW);
      ref = oracle::step(ref_model, ref, 1e-3, dW);
      const BlochVector b = density_to_bloch(rho);
      worst = std::max({worst, std::abs(b.x - ref.x), std::abs(b.y - ref.y), std::abs(b.z - ref.z)});
      REQUIRE(std::abs(rho.op.trace() - Complex(1.0)) <= 1e-9);
      REQUIRE(rho.op.is_hermitian());
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("step_unnormalized") {
  const ModelSpec model = bare_sigma_z(0.5);
  const DensityState north = bloch_to_density({0, 0, 1});
  const DensityState same = step_unnormalized(north, model, 1e-3, 0.0);
  CHECK(op_distance(same.op, north.op) <= 1e-15);
  CHECK(same.log_trace == 0.0);
  CHECK_FALSE(same.normalized);

  // Trace after one step: 1 + sqrt(eta) Tr(M rho) dY.
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const ModelSpec full = ModelSpec::two_level(1.0, 1.43, 1.0, 0.5);
  for (int i = 0; i < 200; ++i) {
    const BlochVector b{u(gen), u(gen), u(gen)};
    const double d = 0.1 * u(gen);
    const DensityState next = step_unnormalized(bloch_to_density(b), full, 1e-3, d);
    const double expected = 1.0 + std::sqrt(0.5) * 2.0 * b.z * d;
    REQUIRE(next.log_trace == doctest::Approx(std::log(expected)).epsilon(1e-12));
    REQUIRE(std::abs(next.op.trace() - Complex(1.0)) <= 1e-12);
  }
  CHECK_THROWS_AS(step_unnormalized(north, model, 1e-3, -10.0), NumericalError);
}

TEST_CASE("simulate_record zero-noise hook at the dark state") {
  const ModelSpec model = bare_sigma_z(0.5);
  const SimGrid grid = SimGrid::from_steps(1e-3, 500);
  const SimulationResult sim = simulate_record(model, bloch_to_density({0, 0, 1}), grid, zero_noise());
  REQUIRE(sim.record.dY.size() == 500);
  for (double dy : sim.record.dY) REQUIRE(dy == doctest::Approx(std::sqrt(2.0) * 1e-3).epsilon(1e-14));
  CHECK(sim.truth.states.size() == 501);
}

TEST_CASE("simulate_record at the mixed state has zero-mean drift") {
  // The signal vanishes at I/2; the state is reset before every sampled step.
  const ModelSpec model = bare_sigma_z(0.5);
  Rng rng(17);
  const double dt = 1e-3;
  double sum = 0.0, sum_sq = 0.0;
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    TruthSimulator sim(model, bloch_to_density({0, 0, 0}), dt);
    const double v = sim.advance(rng.wiener(dt)) / dt;
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sum_sq / n - mean * mean) / (n - 1));
  CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("simulate_record is deterministic for a fixed seed") {
  const ModelSpec model = ModelSpec::two_level(1.0, 1.43, 1.0, 0.5);
  const SimGrid grid = SimGrid::from_steps(1e-3, 2000);
  const auto a = simulate_record(model, bloch_to_density({0, 0, 1}), grid, gaussian(5));
  const auto b = simulate_record(model, bloch_to_density({0, 0, 1}), grid, gaussian(5));
  CHECK(a.record.dY == b.record.dY);
  CHECK(a.truth.loglik == b.truth.loglik);
}

TEST_CASE("filter closed form on the zero-noise dark-state record") {
  const double kappa = 1.0, eta = 0.5;
  const ModelSpec model = ModelSpec::two_level(0.0, 0.0, kappa, eta);
  const SimGrid grid = SimGrid::from_steps(1e-3, 1000);
  const DensityState north = bloch_to_density({0, 0, 1});
  const auto sim = simulate_record(model, north, grid, zero_noise());
  const FilterPath path = filter(sim.record, model, north);
  const double m = 2.0 * std::sqrt(kappa);
  // Step-by-step accumulation of the closed-form increment.
  double acc = 0.0;
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    acc += std::sqrt(eta) * m * sim.record.dY[k] - 0.5 * eta * m * m * grid.dt();
    REQUIRE(path.loglik[k + 1] == doctest::Approx(acc).epsilon(1e-12));
  }
  CHECK(path.loglik.back() == doctest::Approx(0.5 * eta * m * m * grid.t_max()).epsilon(1e-12));
  // The trace route agrees to first order on this deterministic record.
  const auto trace = trace_likelihood(sim.record, model, north);
  CHECK(trace.back() == doctest::Approx(1000 * std::log(1.0 + eta * m * m * 1e-3)).epsilon(1e-12));
}

TEST_CASE("empty record") {
  const ModelSpec model = ModelSpec::two_level(1.0, 1.43, 1.0, 0.5);
  const MeasurementRecord empty{SimGrid::from_steps(1e-3, 0), {}};
  const FilterPath path = filter(empty, model, bloch_to_density({0, 0, 1}));
  CHECK(path.loglik == std::vector<double>{0.0});
  CHECK(path.states.size() == 1);
  CHECK(trace_likelihood(empty, model, bloch_to_density({0, 0, 1})) == std::vector<double>{0.0});
}

TEST_CASE("record validation") {
  const ModelSpec model = ModelSpec::two_level(1.0, 1.43, 1.0, 0.5);
  const MeasurementRecord short_record{SimGrid::from_steps(1e-3, 3), {0.0, 0.0}};
  CHECK_THROWS_AS(filter(short_record, model, bloch_to_density({0, 0, 1})), DimensionError);
  const MeasurementRecord bad{SimGrid::from_steps(1e-3, 2), {0.0, std::numeric_limits<double>::infinity()}};
  CHECK_THROWS_AS(filter(bad, model, bloch_to_density({0, 0, 1})), NumericalError);
}

TEST_CASE("filter matches the Bloch oracle and the innovation form") {
  const ModelSpec truth_model = ModelSpec::two_level(1.0, 1.43, 1.0, 0.5);
  const ModelSpec filt_model = ModelSpec::two_level(2.0, 1.43, 1.0, 0.5);
  const SimGrid grid = SimGrid::from_steps(1e-3, 4000);
  const auto sim = simulate_record(truth_model, bloch_to_density({0, 0, 1}), grid, gaussian(31));
  const FilterPath path = filter(sim.record, filt_model, bloch_to_density({0, 0, 1}));

  const oracle::TwoLevel ref_model{2.0, 1.43, 1.0, 0.5};
  oracle::Bloch r{0, 0, 1};
  double l = 0.0, worst_state = 0.0, worst_l = 0.0;
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    const double dy = sim.record.dY[k];
    l += oracle::loglik_increment(ref_model, r, grid.dt(), dy);
    const double innov = dy - std::sqrt(ref_model.eta) * ref_model.signal(r) * grid.dt();
    r = oracle::step(ref_model, r, grid.dt(), innov);
    const BlochVector b = density_to_bloch(path.states[k + 1]);
    worst_state = std::max({worst_state, std::abs(b.x - r.x), std::abs(b.y - r.y), std::abs(b.z - r.z)});
    worst_l = std::max(worst_l, std::abs(path.loglik[k + 1] - l));
  }
  CHECK(worst_state <= 1e-9);
  CHECK(worst_l <= 1e-9);
}

TEST_CASE("paper_literal and ito_corrected differ by the accumulated correction") {
  const ModelSpec model = ModelSpec::two_level(1.0, 1.43, 1.0, 0.5);
  const SimGrid grid = SimGrid::from_steps(1e-3, 3000);
  const DensityState rho0 = bloch_to_density({0, 0, 1});
  const auto sim = simulate_record(model, rho0, grid, gaussian(8));
  const FilterPath ito = filter(sim.record, model, rho0, LoglikMode::ito_corrected);
  const FilterPath lit = filter(sim.record, model, rho0, LoglikMode::paper_literal);
  double correction = 0.0;
  for (std::size_t k = 0; k <= grid.n_steps(); ++k) {
    REQUIRE(lit.loglik[k] - ito.loglik[k] == doctest::Approx(correction).epsilon(1e-9).scale(1.0));
    if (k < grid.n_steps()) {
      const double m = msuperop(model.measurement, ito.states[k]).signal;
      correction += 0.5 * model.eta * m * m * grid.dt();
    }
  }
  // States do not depend on the log-likelihood convention.
  CHECK(op_distance(ito.states.back().op, lit.states.back().op) == 0.0);
}

TEST_CASE("trace likelihood tracks the filter and converges with dt") {
  // Same Brownian path sampled at three resolutions.
  const ModelSpec model = ModelSpec::two_level(1.0, 1.43, 1.0, 0.5);
  const DensityState rho0 = bloch_to_density({0, 0, 1});
  const double t_max = 5.0, fine_dt = 2.5e-4;
  const std::size_t fine_steps = static_cast<std::size_t>(std::llround(t_max / fine_dt));
  double mean_gap[3] = {0, 0, 0};
  const int n_paths = 8;
  for (int p = 0; p < n_paths; ++p) {
    Rng rng(1000 + p);
    std::vector<double> fine(fine_steps);
    for (double& w : fine) w = rng.wiener(fine_dt);
    int idx = 0;
    for (std::size_t stride : {4u, 2u, 1u}) {
      const double dt = fine_dt * stride;
      std::vector<double> coarse(fine_steps / stride, 0.0);
      for (std::size_t k = 0; k < fine_steps; ++k) coarse[k / stride] += fine[k];
      std::size_t j = 0;
      const auto sim = simulate_record(model, rho0, SimGrid::from_steps(dt, coarse.size()),
                                       [&](double) { return coarse[j++]; });
      const double l_filter = filter(sim.record, model, rho0).loglik.back();
      const double l_trace = trace_likelihood(sim.record, model, rho0).back();
      mean_gap[idx++] += std::abs(l_filter - l_trace) / n_paths;
    }
  }
  CHECK(mean_gap[0] > mean_gap[1]);
  CHECK(mean_gap[1] > mean_gap[2]);
  CHECK(mean_gap[2] < 0.1);
}

TEST_CASE("steppers agree with the batch functions") {
  const ModelSpec model = ModelSpec::two_level(1.0, 1.43, 1.0, 0.5);
  const DensityState rho0 = bloch_to_density({0, 0, 1});
  const SimGrid grid = SimGrid::from_steps(1e-3, 1500);
  const auto sim = simulate_record(model, rho0, grid, gaussian(12));
  LikelihoodFilter lf(model, rho0, grid.dt());
  UnnormalizedFilter uf(model, rho0, grid.dt());
  for (double dy : sim.record.dY) {
    lf.update(dy);
    uf.update(dy);
  }
  CHECK(lf.loglik() == filter(sim.record, model, rho0).loglik.back());
  CHECK(uf.loglik() == trace_likelihood(sim.record, model, rho0).back());
  // The truth's own filter on its own record reproduces the truth log-likelihood.
  CHECK(sim.truth.loglik.back() == doctest::Approx(lf.loglik()).epsilon(1e-9));
}

TEST_CASE("general dimension: qutrit trajectory keeps invariants") {
  Matrix h = Matrix::Zero(3, 3);
  h(0, 1) = h(1, 0) = 0.7;
  h(1, 2) = h(2, 1) = 0.4;
  h(2, 2) = -0.3;
  ModelSpec model;
  model.hamiltonian = Operator::hermitian(h);
  Matrix f = Matrix::Zero(3, 3);
  f(0, 0) = 1.0;
  f(2, 2) = -1.0;
  model.measurement = Operator(f);
  model.eta = 0.8;
  const DensityState rho0 = DensityState::from_normalized(Operator(Matrix::Identity(3, 3) / 3.0));
  const auto sim = simulate_record(model, rho0, SimGrid::from_steps(1e-3, 2000), gaussian(3));
  for (const DensityState& s : sim.truth.states) {
    REQUIRE(std::abs(s.op.trace() - Complex(1.0)) <= 1e-9);
    REQUIRE(s.op.is_hermitian());
    REQUIRE(min_eigenvalue(s.op) >= -1e-8);
  }
  CHECK_THROWS_AS(density_to_bloch(sim.truth.states.back()), DimensionError);
}
