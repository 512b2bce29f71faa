#pragma once

#include "qdiscrim/trajectory.hpp"

namespace qdiscrim {

enum class Hypothesis { h0 = 0, h1 = 1 };

/// c_ij is the cost of accepting H_i when H_j is true.
struct CostMatrix {
  double c00 = 0.0;
  double c01 = 1.0;
  double c10 = 1.0;
  double c11 = 0.0;

  static CostMatrix zero_one() { return {}; }
  /// c01 > c11 and c10 > c00.
  bool admissible() const { return c01 > c11 && c10 > c00; }
};

struct HypothesisPair {
  ModelSpec model0;
  ModelSpec model1;
  double prior0 = 0.5;
  double prior1 = 0.5;
  CostMatrix cost;

  /// Priors positive and summing to one (to 1e-12), cost admissible, models valid.
  void validate() const;
};

struct PosteriorPair {
  double p0 = 0.5;
  double p1 = 0.5;
};

/// Outcome of the likelihood-ratio test. Ties (log_ratio == log_threshold) accept H1.
struct Decision {
  Hypothesis accepted = Hypothesis::h1;
  double log_ratio = 0.0;
  double log_threshold = 0.0;

  friend bool operator==(const Decision&, const Decision&) = default;
};

/// Bayes' rule in log space; safe for |loglik| up to ~1e306.
PosteriorPair posteriors(double loglik0, double loglik1, const HypothesisPair& pair);

/// ln[(c01 - c11)/(c10 - c00) * prior1/prior0]. Throws ConfigError for inadmissible costs.
double bayes_threshold(const HypothesisPair& pair);

Decision decide(double loglik0, double loglik1, const HypothesisPair& pair);

/// Probability that the zero-one Bayes decision is wrong given the record: min(p0, p1).
double conditional_error(const PosteriorPair& post);

/// sum_ij c_ij P(H_i|H_j) P(H_j), with p_10 = P(accept H1 | H0) and p_01 = P(accept H0 | H1).
double bayes_risk(const HypothesisPair& pair, double p_10, double p_01);

const char* to_string(Hypothesis h);

}  // namespace qdiscrim
