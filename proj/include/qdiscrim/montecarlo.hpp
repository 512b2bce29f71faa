#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qdiscrim/inference.hpp"

namespace qdiscrim {

/// `posterior` averages min(p0, p1) over trials; `counting` counts wrong MAP decisions.
enum class Estimator { posterior, counting };
enum class TruthSampling { from_prior, fixed_h0, fixed_h1 };

/// How each hypothesis's likelihood is propagated: normalized filter plus
/// log-likelihood increments, or the linear SME whose trace is the likelihood.
enum class FilterRoute { normalized, unnormalized };

/// The counting baseline propagates likelihoods through the linear SME.
FilterRoute route_for(Estimator estimator);

struct ExperimentConfig {
  HypothesisPair pair;
  SimGrid grid;
  DensityState rho0;
  double beta = 0.01;
  std::size_t n_trials = 1;
  std::uint64_t base_seed = 0;
  Estimator estimator = Estimator::posterior;
  TruthSampling truth_sampling = TruthSampling::from_prior;
  LoglikMode loglik_mode = LoglikMode::ito_corrected;
  unsigned workers = 1;

  void validate() const;
};

struct TrialResult {
  Hypothesis truth = Hypothesis::h0;
  std::vector<Decision> decision_path;
  std::vector<PosteriorPair> posterior_path;
  std::vector<double> conditional_error_path;
  Decision final_decision;
  /// First grid time with conditional error <= beta.
  std::optional<double> stop_time;
  std::size_t repair_count = 0;
  double final_loglik0 = 0.0;
  double final_loglik1 = 0.0;
};

/// Per-step filter detail for single-trial output (two-level models only).
struct TrialTrace {
  std::vector<BlochVector> bloch0;
  std::vector<BlochVector> bloch1;
  std::vector<double> loglik0;
  std::vector<double> loglik1;
};

struct QeCurve {
  std::vector<double> times;
  std::vector<double> qe;
  std::vector<double> std_error;
  std::size_t n_trials = 0;
  Estimator estimator = Estimator::posterior;
};

/// Decision-error tallies at one grid point. n_10: accepted H1 while H0 true.
struct ErrorCounts {
  std::size_t n_10 = 0;
  std::size_t n_01 = 0;
  std::size_t n_trials_0 = 0;
  std::size_t n_trials_1 = 0;
};

struct CountingEstimate {
  QeCurve curve;
  std::vector<ErrorCounts> counts;  // one per grid point
};

struct BenchRow {
  std::size_t n_trials = 0;
  Estimator estimator = Estimator::posterior;
  std::optional<double> first_passage_time;
  double wall_clock_seconds = 0.0;
  std::uint64_t seed = 0;
};

using BenchTable = std::vector<BenchRow>;

/// Error raised by a trial; carries the failing trial index.
class TrialError : public NumericalError {
 public:
  TrialError(std::size_t trial_index, const std::string& what);
  std::size_t trial_index() const { return trial_index_; }

 private:
  std::size_t trial_index_;
};

/// One discrimination experiment; deterministic in (base_seed, trial_index).
TrialResult run_trial(const ExperimentConfig& cfg, std::size_t trial_index,
                      TrialTrace* trace = nullptr);

/// Runs every trial (concurrently up to cfg.workers) and hands results to `visit`
/// in increasing trial-index order.
void for_each_trial(const ExperimentConfig& cfg,
                    const std::function<void(std::size_t, const TrialResult&)>& visit);

QeCurve estimate_qe_posterior(const ExperimentConfig& cfg);

CountingEstimate estimate_qe_counting(const ExperimentConfig& cfg);

/// Qe and its binomial standard error from error tallies.
std::pair<double, double> qe_from_counts(const ErrorCounts& counts, const HypothesisPair& pair);

/// Smallest time with qe <= beta.
std::optional<double> first_passage(const QeCurve& curve, double beta);

/// Pointwise mean and standard error, folded in trial order.
QeCurve aggregate(const SimGrid& grid, const std::vector<std::vector<double>>& partials,
                  Estimator estimator = Estimator::posterior);

/// Runs `n_trials` experiments in lockstep and stops as soon as the estimator's
/// Qe reaches beta. Returns the first-passage time, if any.
std::optional<double> run_until_threshold(const ExperimentConfig& cfg, Estimator estimator,
                                          std::size_t n_trials);

/// Wall-clock comparison of the two estimators; the counting row is skipped for N = 1.
BenchTable bench(const ExperimentConfig& cfg, const std::vector<std::size_t>& n_list,
                 int repeats = 3);

const char* to_string(Estimator e);
const char* to_string(TruthSampling t);

}  // namespace qdiscrim
