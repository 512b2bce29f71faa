#include "qdiscrim/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>

#include "qdiscrim/rng.hpp"

namespace qdiscrim {

namespace {

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

Matrix random_matrix(Rng& rng, int dim) {
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = Complex(rng.normal(), rng.normal());
  }
  return m;
}

/// Random full-rank density matrix G G^dagger / Tr.
Operator random_state(Rng& rng, int dim) {
  const Matrix g = random_matrix(rng, dim);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return Operator(0.5 * (rho + rho.adjoint()));
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

bool same_trial(const TrialResult& a, const TrialResult& b) {
  if (a.truth != b.truth || a.posterior_path.size() != b.posterior_path.size()) return false;
  for (std::size_t k = 0; k < a.posterior_path.size(); ++k) {
    if (std::memcmp(&a.posterior_path[k], &b.posterior_path[k], sizeof(PosteriorPair)) != 0 ||
        !(a.decision_path[k] == b.decision_path[k])) {
      return false;
    }
  }
  return bit_equal(a.conditional_error_path, b.conditional_error_path) &&
         a.final_decision == b.final_decision && a.repair_count == b.repair_count;
}

CheckResult state_guards(const ExperimentConfig& cfg) {
  double worst_trace = 0.0, worst_herm = 0.0, worst_eig = 0.0;
  Rng rng(trial_seed(cfg.base_seed, 1001));
  const SimGrid grid = SimGrid::make(cfg.grid.dt(), std::min(10.0, cfg.grid.t_max()));
  for (const ModelSpec* model : {&cfg.pair.model0, &cfg.pair.model1}) {
    const auto sim = simulate_record(*model, cfg.rho0, grid, [&](double dt) { return rng.wiener(dt); });
    const auto other = filter(sim.record, model == &cfg.pair.model0 ? cfg.pair.model1 : cfg.pair.model0,
                              cfg.rho0);
    for (const auto* path : {&sim.truth, &other}) {
      for (const DensityState& s : path->states) {
        worst_trace = std::max(worst_trace, std::abs(s.op.trace() - Complex(1.0)));
        worst_herm = std::max(worst_herm, s.op.hermiticity_defect());
        worst_eig = std::min(worst_eig, min_eigenvalue(s.op));
      }
    }
  }
  const bool ok = worst_trace <= 1e-9 && worst_herm <= 1e-12 && worst_eig >= -1e-8;
  return {"state guards (trace, Hermiticity, positivity)", ok,
          "max|Tr-1|=" + sci(worst_trace) + " max herm defect=" + sci(worst_herm) +
              " min eig=" + sci(worst_eig)};
}

CheckResult superoperator_identities() {
  Rng rng(20240601);
  double worst_trace = 0.0, worst_herm = 0.0, worst_order = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 2 + trial % 3;
    const DensityState rho{random_state(rng, dim), true, 0.0};
    const Operator f(random_matrix(rng, dim));
    const Matrix a = random_matrix(rng, dim);
    const Operator fh(0.5 * (a + a.adjoint()));

    const Operator d_std = dissipator(f, rho, Ordering::standard_fdagf);
    const Operator inn = innovation(f, rho);
    worst_trace = std::max({worst_trace, std::abs(d_std.trace()), std::abs(inn.trace()),
                            std::abs(dissipator(fh, rho, Ordering::paper_ffdag).trace())});
    worst_herm = std::max({worst_herm, d_std.hermiticity_defect(), inn.hermiticity_defect(),
                           msuperop(f, rho).op.hermiticity_defect()});
    const Operator diff = dissipator(fh, rho, Ordering::paper_ffdag) -
                          dissipator(fh, rho, Ordering::standard_fdagf);
    worst_order = std::max(worst_order, diff.max_abs());
  }
  const bool ok = worst_trace <= 1e-12 && worst_herm <= 1e-12 && worst_order <= 1e-12;
  return {"superoperator trace annihilation and Hermiticity", ok,
          "max|Tr|=" + sci(worst_trace) + " max herm defect=" + sci(worst_herm) +
              " ordering gap (Hermitian F)=" + sci(worst_order)};
}

CheckResult bloch_round_trip() {
  Rng rng(77);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    BlochVector v{rng.normal(), rng.normal(), rng.normal()};
    const double scale = std::cbrt(rng.uniform()) / v.norm();
    v = {v.x * scale, v.y * scale, v.z * scale};
    const BlochVector back = density_to_bloch(bloch_to_density(v));
    worst = std::max({worst, std::abs(back.x - v.x), std::abs(back.y - v.y), std::abs(back.z - v.z)});
  }
  return {"Bloch round-trip", worst <= 1e-12, "max error=" + sci(worst)};
}

CheckResult posterior_normalization(const ExperimentConfig& cfg) {
  Rng rng(99);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double scale = std::pow(10.0, 6.0 * rng.uniform());
    const PosteriorPair p =
        posteriors(scale * (2 * rng.uniform() - 1), scale * (2 * rng.uniform() - 1), cfg.pair);
    worst = std::max(worst, std::abs(p.p0 + p.p1 - 1.0));
    if (!(p.p0 >= 0.0 && p.p0 <= 1.0 && p.p1 >= 0.0 && p.p1 <= 1.0)) {
      return {"posterior normalization", false, "posterior outside [0, 1]"};
    }
  }
  return {"posterior normalization", worst <= 1e-12, "max|p0+p1-1|=" + sci(worst)};
}

CheckResult shift_invariance(const ExperimentConfig& cfg) {
  // Dyadic values keep every sum exact, so invariance must hold bit for bit.
  Rng rng(5);
  constexpr double kQuantum = 1.0 / 1024.0;
  auto dyadic = [&](double range) { return std::round(range * (2 * rng.uniform() - 1) / kQuantum) * kQuantum; };
  for (int i = 0; i < 20000; ++i) {
    const double l0 = dyadic(64.0), l1 = dyadic(64.0), c = dyadic(4096.0);
    const PosteriorPair a = posteriors(l0, l1, cfg.pair);
    const PosteriorPair b = posteriors(l0 + c, l1 + c, cfg.pair);
    if (a.p0 != b.p0 || a.p1 != b.p1 ||
        decide(l0, l1, cfg.pair).accepted != decide(l0 + c, l1 + c, cfg.pair).accepted) {
      return {"shift invariance", false, "posterior or decision changed under a common shift"};
    }
  }
  return {"shift invariance", true, "20000 dyadic shifts"};
}

ExperimentConfig small_run(const ExperimentConfig& cfg, std::size_t trials, double t_max) {
  ExperimentConfig run = cfg;
  run.grid = SimGrid::make(cfg.grid.dt(), std::min(t_max, cfg.grid.t_max()));
  run.n_trials = trials;
  run.truth_sampling = TruthSampling::from_prior;
  return run;
}

CheckResult determinism(const ExperimentConfig& cfg) {
  const ExperimentConfig run = small_run(cfg, 1, 3.0);
  for (std::size_t idx : {0u, 7u}) {
    if (!same_trial(run_trial(run, idx), run_trial(run, idx))) {
      return {"determinism", false, "trial " + std::to_string(idx) + " differs between runs"};
    }
  }
  auto record = [&] {
    Rng rng(trial_seed(run.base_seed, 3));
    return simulate_record(run.pair.model0, run.rho0, run.grid,
                           [&](double dt) { return rng.wiener(dt); })
        .record.dY;
  };
  if (!bit_equal(record(), record())) return {"determinism", false, "records differ"};
  return {"determinism", true, "repeated trials and records are bit-identical"};
}

CheckResult parallel_equivalence(const ExperimentConfig& cfg) {
  ExperimentConfig seq = small_run(cfg, 24, 2.0);
  seq.workers = 1;
  ExperimentConfig par = seq;
  par.workers = 4;
  const QeCurve a = estimate_qe_posterior(seq);
  const QeCurve b = estimate_qe_posterior(par);
  seq.estimator = par.estimator = Estimator::counting;
  const QeCurve c = estimate_qe_counting(seq).curve;
  const QeCurve d = estimate_qe_counting(par).curve;
  const bool ok = bit_equal(a.qe, b.qe) && bit_equal(a.std_error, b.std_error) &&
                  bit_equal(c.qe, d.qe) && bit_equal(c.std_error, d.std_error);
  return {"parallel/sequential bit-equality", ok, "24 trials, 1 vs 4 workers, both estimators"};
}

CheckResult decision_consistency(const ExperimentConfig& cfg) {
  const ExperimentConfig run = small_run(cfg, 16, 3.0);
  bool ok = true;
  for_each_trial(run, [&](std::size_t, const TrialResult& r) {
    ok = ok && r.final_decision == decide(r.final_loglik0, r.final_loglik1, run.pair);
  });
  return {"final decision consistency", ok, "16 trials"};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(const ExperimentConfig& cfg) {
  std::vector<std::function<CheckResult()>> checks = {
      [&] { return state_guards(cfg); },
      [] { return superoperator_identities(); },
      [] { return bloch_round_trip(); },
      [&] { return posterior_normalization(cfg); },
      [&] { return shift_invariance(cfg); },
      [&] { return determinism(cfg); },
      [&] { return parallel_equivalence(cfg); },
      [&] { return decision_consistency(cfg); },
  };
  std::vector<CheckResult> out;
  for (const auto& check : checks) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({"check raised", false, e.what()});
    }
  }
  return out;
}

}  // namespace qdiscrim
