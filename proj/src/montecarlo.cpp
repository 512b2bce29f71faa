#include "qdiscrim/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include "qdiscrim/rng.hpp"

namespace qdiscrim {

FilterRoute route_for(Estimator estimator) {
  return estimator == Estimator::counting ? FilterRoute::unnormalized : FilterRoute::normalized;
}

void ExperimentConfig::validate() const {
  pair.validate();
  if (!rho0.normalized) throw ConfigError("initial state must be normalized");
  if (rho0.dim() != pair.model0.dim()) throw DimensionError("initial state dimension mismatch");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta must lie in (0, 1)");
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (grid.n_steps() < 1) throw ConfigError("grid must have at least one step");
}

TrialError::TrialError(std::size_t trial_index, const std::string& what)
    : NumericalError("trial " + std::to_string(trial_index) + ": " + what),
      trial_index_(trial_index) {}

namespace {

/// Likelihood propagation for one hypothesis along either route.
class HypothesisTracker {
 public:
  HypothesisTracker(const ModelSpec& model, const DensityState& rho0, double dt, FilterRoute route,
                    LoglikMode mode) {
    if (route == FilterRoute::normalized) {
      normalized_.emplace(model, rho0, dt, mode);
    } else {
      unnormalized_.emplace(model, rho0, dt);
    }
  }

  void update(double dY) {
    if (normalized_) {
      normalized_->update(dY);
    } else {
      unnormalized_->update(dY);
    }
  }

  double loglik() const { return normalized_ ? normalized_->loglik() : unnormalized_->loglik(); }
  const DensityState& state() const {
    return normalized_ ? normalized_->state() : unnormalized_->state();
  }
  std::size_t repairs() const {
    return normalized_ ? normalized_->repairs() : unnormalized_->repairs();
  }

 private:
  std::optional<LikelihoodFilter> normalized_;
  std::optional<UnnormalizedFilter> unnormalized_;
};

Hypothesis sample_truth(TruthSampling sampling, double prior0, Rng& rng) {
  switch (sampling) {
    case TruthSampling::fixed_h0:
      return Hypothesis::h0;
    case TruthSampling::fixed_h1:
      return Hypothesis::h1;
    case TruthSampling::from_prior:
      break;
  }
  return rng.uniform() < prior0 ? Hypothesis::h0 : Hypothesis::h1;
}

/// Truth simulation plus the dual filter on the shared record, one grid step at a time.
class TrialEngine {
 public:
  TrialEngine(const ExperimentConfig& cfg, std::size_t trial_index, FilterRoute route)
      : rng_(trial_seed(cfg.base_seed, trial_index)),
        truth_(sample_truth(cfg.truth_sampling, cfg.pair.prior0, rng_)),
        dt_(cfg.grid.dt()),
        sim_(truth_ == Hypothesis::h0 ? cfg.pair.model0 : cfg.pair.model1, cfg.rho0, dt_),
        filter0_(cfg.pair.model0, cfg.rho0, dt_, route, cfg.loglik_mode),
        filter1_(cfg.pair.model1, cfg.rho0, dt_, route, cfg.loglik_mode) {}

  void step() {
    const double dY = sim_.advance(rng_.wiener(dt_));
    filter0_.update(dY);
    filter1_.update(dY);
  }

  Hypothesis truth() const { return truth_; }
  const HypothesisTracker& filter0() const { return filter0_; }
  const HypothesisTracker& filter1() const { return filter1_; }
  std::size_t repairs() const { return sim_.repairs() + filter0_.repairs() + filter1_.repairs(); }

 private:
  Rng rng_;
  Hypothesis truth_;
  double dt_;
  TruthSimulator sim_;
  HypothesisTracker filter0_;
  HypothesisTracker filter1_;
};

/// Runs work(i) for i in [0, n) on up to `workers` threads, in batches, and
/// calls fold(i, result) in increasing i.
template <class Result, class Work, class Fold>
void run_ordered(std::size_t n, unsigned workers, Work&& work, Fold&& fold) {
  workers = std::max(1u, workers);
  const std::size_t batch = std::max<std::size_t>(4 * static_cast<std::size_t>(workers), 16);
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t count = std::min(batch, n - start);
    std::vector<std::optional<Result>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          slots[i].emplace(work(start + i));
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    const auto threads = std::min<std::size_t>(workers, count);
    if (threads <= 1) {
      drain();
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(threads);
      for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(drain);
    }
    for (std::size_t i = 0; i < count; ++i) {
      if (errors[i]) std::rethrow_exception(errors[i]);
      fold(start + i, *slots[i]);
    }
  }
}

/// Runs work(i) for every i in [0, n) concurrently; no ordering guarantee.
template <class Work>
void run_parallel(std::size_t n, unsigned workers, Work&& work) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto drain = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        work(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min<std::size_t>(std::max(1u, workers), n);
  if (threads <= 1) {
    drain();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(drain);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Welford mean/variance, one per grid point.
class PointwiseStats {
 public:
  explicit PointwiseStats(std::size_t points) : mean_(points, 0.0), m2_(points, 0.0) {}

  void add(const std::vector<double>& path) {
    if (path.size() != mean_.size()) throw DimensionError("path length mismatch in aggregation");
    ++count_;
    const double n = static_cast<double>(count_);
    for (std::size_t k = 0; k < path.size(); ++k) {
      const double delta = path[k] - mean_[k];
      mean_[k] += delta / n;
      m2_[k] += delta * (path[k] - mean_[k]);
    }
  }

  QeCurve curve(const SimGrid& grid, Estimator estimator) const {
    QeCurve c;
    c.n_trials = count_;
    c.estimator = estimator;
    c.times.resize(mean_.size());
    c.qe = mean_;
    c.std_error.assign(mean_.size(), 0.0);
    for (std::size_t k = 0; k < mean_.size(); ++k) {
      c.times[k] = grid.time(k);
      c.qe[k] = std::clamp(c.qe[k], 0.0, 1.0);
      if (count_ > 1) {
        const double n = static_cast<double>(count_);
        c.std_error[k] = std::sqrt(m2_[k] / (n - 1.0) / n);
      }
    }
    return c;
  }

 private:
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::size_t count_ = 0;
};

/// MAP rule used by the counting baseline: accept H0 iff its posterior exceeds 1/2.
bool map_accepts_h0(const PosteriorPair& p) { return p.p0 > 0.5; }

bool map_is_wrong(Hypothesis truth, const PosteriorPair& p) {
  return map_accepts_h0(p) != (truth == Hypothesis::h0);
}

}  // namespace

TrialResult run_trial(const ExperimentConfig& cfg, std::size_t trial_index, TrialTrace* trace) {
  try {
    TrialEngine engine(cfg, trial_index, route_for(cfg.estimator));
    const SimGrid& grid = cfg.grid;
    TrialResult out;
    out.truth = engine.truth();
    out.decision_path.reserve(grid.n_points());
    out.posterior_path.reserve(grid.n_points());
    out.conditional_error_path.reserve(grid.n_points());
    if (trace != nullptr) *trace = TrialTrace{};

    for (std::size_t k = 0;; ++k) {
      const double l0 = engine.filter0().loglik();
      const double l1 = engine.filter1().loglik();
      const PosteriorPair post = posteriors(l0, l1, cfg.pair);
      const double err = conditional_error(post);
      out.decision_path.push_back(decide(l0, l1, cfg.pair));
      out.posterior_path.push_back(post);
      out.conditional_error_path.push_back(err);
      if (!out.stop_time && err <= cfg.beta) out.stop_time = grid.time(k);
      if (trace != nullptr) {
        trace->bloch0.push_back(density_to_bloch(engine.filter0().state()));
        trace->bloch1.push_back(density_to_bloch(engine.filter1().state()));
        trace->loglik0.push_back(l0);
        trace->loglik1.push_back(l1);
      }
      if (k == grid.n_steps()) {
        out.final_loglik0 = l0;
        out.final_loglik1 = l1;
        break;
      }
      engine.step();
    }
    out.final_decision = out.decision_path.back();
    out.repair_count = engine.repairs();
    return out;
  } catch (const TrialError&) {
    throw;
  } catch (const Error& e) {
    throw TrialError(trial_index, e.what());
  }
}

void for_each_trial(const ExperimentConfig& cfg,
                    const std::function<void(std::size_t, const TrialResult&)>& visit) {
  cfg.validate();
  run_ordered<TrialResult>(
      cfg.n_trials, cfg.workers, [&](std::size_t i) { return run_trial(cfg, i); }, visit);
}

QeCurve estimate_qe_posterior(const ExperimentConfig& cfg) {
  if (cfg.truth_sampling != TruthSampling::from_prior) {
    throw ConfigError("posterior estimator requires truth_sampling = from_prior");
  }
  ExperimentConfig run = cfg;
  run.estimator = Estimator::posterior;
  run.validate();
  PointwiseStats stats(run.grid.n_points());
  run_ordered<std::vector<double>>(
      run.n_trials, run.workers,
      [&](std::size_t i) { return std::move(run_trial(run, i).conditional_error_path); },
      [&](std::size_t, const std::vector<double>& path) { stats.add(path); });
  return stats.curve(run.grid, Estimator::posterior);
}

std::pair<double, double> qe_from_counts(const ErrorCounts& c, const HypothesisPair& pair) {
  if (c.n_trials_0 == 0) throw NumericalError("no trials with H0 true; P(H1|H0) undefined");
  if (c.n_trials_1 == 0) throw NumericalError("no trials with H1 true; P(H0|H1) undefined");
  if (c.n_10 > c.n_trials_0 || c.n_01 > c.n_trials_1) {
    throw InvalidStateError("error count exceeds trial count");
  }
  const double n0 = static_cast<double>(c.n_trials_0);
  const double n1 = static_cast<double>(c.n_trials_1);
  const double q10 = static_cast<double>(c.n_10) / n0;
  const double q01 = static_cast<double>(c.n_01) / n1;
  const double qe = bayes_risk(pair, q10, q01);
  const double var = pair.prior0 * pair.prior0 * q10 * (1.0 - q10) / n0 +
                     pair.prior1 * pair.prior1 * q01 * (1.0 - q01) / n1;
  return {qe, std::sqrt(var)};
}

CountingEstimate estimate_qe_counting(const ExperimentConfig& cfg) {
  ExperimentConfig run = cfg;
  run.estimator = Estimator::counting;
  run.validate();
  // Counting always evaluates the zero-one risk, whatever cost matrix is configured.
  HypothesisPair zero_one = run.pair;
  zero_one.cost = CostMatrix::zero_one();

  const std::size_t points = run.grid.n_points();
  CountingEstimate out;
  out.counts.assign(points, ErrorCounts{});
  struct Outcome {
    Hypothesis truth;
    std::vector<bool> wrong;
  };
  run_ordered<Outcome>(
      run.n_trials, run.workers,
      [&](std::size_t i) {
        TrialResult r = run_trial(run, i);
        Outcome o{r.truth, std::vector<bool>(points)};
        for (std::size_t k = 0; k < points; ++k) o.wrong[k] = map_is_wrong(r.truth, r.posterior_path[k]);
        return o;
      },
      [&](std::size_t, const Outcome& o) {
        for (std::size_t k = 0; k < points; ++k) {
          ErrorCounts& c = out.counts[k];
          if (o.truth == Hypothesis::h0) {
            ++c.n_trials_0;
            c.n_10 += o.wrong[k] ? 1 : 0;
          } else {
            ++c.n_trials_1;
            c.n_01 += o.wrong[k] ? 1 : 0;
          }
        }
      });

  QeCurve& curve = out.curve;
  curve.n_trials = run.n_trials;
  curve.estimator = Estimator::counting;
  curve.times.resize(points);
  curve.qe.resize(points);
  curve.std_error.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    curve.times[k] = run.grid.time(k);
    std::tie(curve.qe[k], curve.std_error[k]) = qe_from_counts(out.counts[k], zero_one);
  }
  return out;
}

std::optional<double> first_passage(const QeCurve& curve, double beta) {
  for (std::size_t k = 0; k < curve.qe.size(); ++k) {
    if (curve.qe[k] <= beta) return curve.times[k];
  }
  return std::nullopt;
}

QeCurve aggregate(const SimGrid& grid, const std::vector<std::vector<double>>& partials,
                  Estimator estimator) {
  PointwiseStats stats(grid.n_points());
  for (const auto& p : partials) stats.add(p);
  return stats.curve(grid, estimator);
}

std::optional<double> run_until_threshold(const ExperimentConfig& cfg, Estimator estimator,
                                          std::size_t n_trials) {
  ExperimentConfig run = cfg;
  run.estimator = estimator;
  run.n_trials = n_trials;
  run.validate();
  HypothesisPair zero_one = run.pair;
  zero_one.cost = CostMatrix::zero_one();

  // The counting baseline estimates P(H_i|H_j) = n_i^(j) / N from N experiments
  // under each true hypothesis, so it runs 2N trajectories.
  std::vector<TrialEngine> engines;
  const std::size_t n_engines = estimator == Estimator::counting ? 2 * n_trials : n_trials;
  engines.reserve(n_engines);
  ExperimentConfig under_h0 = run;
  ExperimentConfig under_h1 = run;
  under_h0.truth_sampling = TruthSampling::fixed_h0;
  under_h1.truth_sampling = TruthSampling::fixed_h1;
  try {
    for (std::size_t i = 0; i < n_engines; ++i) {
      const ExperimentConfig& c =
          estimator == Estimator::posterior ? run : (i < n_trials ? under_h0 : under_h1);
      engines.emplace_back(c, i, route_for(estimator));
    }
  } catch (const Error& e) {
    throw TrialError(engines.size(), e.what());
  }

  // Per-engine values at each step of the current block.
  constexpr std::size_t kBlock = 250;
  std::vector<std::vector<double>> values(n_engines, std::vector<double>(kBlock + 1));

  auto record = [&](std::size_t i, std::size_t slot) {
    const TrialEngine& e = engines[i];
    const PosteriorPair post = posteriors(e.filter0().loglik(), e.filter1().loglik(), run.pair);
    values[i][slot] = estimator == Estimator::posterior ? conditional_error(post)
                                                        : (map_is_wrong(e.truth(), post) ? 1.0 : 0.0);
  };
  auto qe_at = [&](std::size_t slot) {
    if (estimator == Estimator::posterior) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n_trials; ++i) sum += values[i][slot];
      return sum / static_cast<double>(n_trials);
    }
    ErrorCounts c;
    for (std::size_t i = 0; i < n_engines; ++i) {
      const bool wrong = values[i][slot] != 0.0;
      if (engines[i].truth() == Hypothesis::h0) {
        ++c.n_trials_0;
        c.n_10 += wrong ? 1 : 0;
      } else {
        ++c.n_trials_1;
        c.n_01 += wrong ? 1 : 0;
      }
    }
    return qe_from_counts(c, zero_one).first;
  };

  for (std::size_t i = 0; i < n_engines; ++i) record(i, 0);
  if (qe_at(0) <= run.beta) return 0.0;

  std::size_t done = 0;
  while (done < run.grid.n_steps()) {
    const std::size_t steps = std::min(kBlock, run.grid.n_steps() - done);
    run_parallel(n_engines, run.workers, [&](std::size_t i) {
      try {
        for (std::size_t s = 1; s <= steps; ++s) {
          engines[i].step();
          record(i, s);
        }
      } catch (const Error& e) {
        throw TrialError(i, e.what());
      }
    });
    for (std::size_t s = 1; s <= steps; ++s) {
      if (qe_at(s) <= run.beta) return run.grid.time(done + s);
    }
    done += steps;
  }
  return std::nullopt;
}

BenchTable bench(const ExperimentConfig& cfg, const std::vector<std::size_t>& n_list, int repeats) {
  if (n_list.empty()) throw ConfigError("bench needs at least one trial count");
  repeats = std::max(1, repeats);
  BenchTable table;
  for (std::size_t n : n_list) {
    for (Estimator est : {Estimator::posterior, Estimator::counting}) {
      if (est == Estimator::counting && n < 2) continue;
      std::vector<double> seconds;
      std::optional<double> passage;
      for (int r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        passage = run_until_threshold(cfg, est, n);
        const auto stop = std::chrono::steady_clock::now();
        seconds.push_back(std::chrono::duration<double>(stop - start).count());
      }
      std::sort(seconds.begin(), seconds.end());
      table.push_back(BenchRow{n, est, passage, seconds[seconds.size() / 2], cfg.base_seed});
    }
  }
  return table;
}

const char* to_string(Estimator e) { return e == Estimator::posterior ? "posterior" : "counting"; }

const char* to_string(TruthSampling t) {
  switch (t) {
    case TruthSampling::from_prior:
      return "from_prior";
    case TruthSampling::fixed_h0:
      return "fixed_H0";
    case TruthSampling::fixed_h1:
      return "fixed_H1";
  }
  return "from_prior";
}

}  // namespace qdiscrim
