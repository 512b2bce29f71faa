#include "qdiscrim/inference.hpp"

#include <algorithm>
#include <cmath>

namespace qdiscrim {

void HypothesisPair::validate() const {
  model0.validate();
  model1.validate();
  if (model0.dim() != model1.dim()) throw DimensionError("hypothesis models differ in dimension");
  if (!(prior0 > 0.0) || !(prior1 > 0.0)) throw ConfigError("priors must be positive");
  if (std::abs(prior0 + prior1 - 1.0) > 1e-12) throw ConfigError("priors must sum to 1");
  if (!cost.admissible()) throw ConfigError("cost matrix must satisfy c01 > c11 and c10 > c00");
}

PosteriorPair posteriors(double loglik0, double loglik1, const HypothesisPair& pair) {
  // Logistic of the posterior log-odds, evaluated on the side where exp() cannot overflow.
  const double log_odds = (loglik0 - loglik1) + (std::log(pair.prior0) - std::log(pair.prior1));
  if (log_odds >= 0.0) {
    const double e = std::exp(-log_odds);
    return PosteriorPair{1.0 / (1.0 + e), e / (1.0 + e)};
  }
  const double e = std::exp(log_odds);
  return PosteriorPair{e / (1.0 + e), 1.0 / (1.0 + e)};
}

double bayes_threshold(const HypothesisPair& pair) {
  const CostMatrix& c = pair.cost;
  if (!c.admissible()) throw ConfigError("cost matrix must satisfy c01 > c11 and c10 > c00");
  return std::log((c.c01 - c.c11) / (c.c10 - c.c00)) + std::log(pair.prior1 / pair.prior0);
}

Decision decide(double loglik0, double loglik1, const HypothesisPair& pair) {
  Decision d;
  d.log_ratio = loglik0 - loglik1;
  d.log_threshold = bayes_threshold(pair);
  d.accepted = d.log_ratio > d.log_threshold ? Hypothesis::h0 : Hypothesis::h1;
  return d;
}

double conditional_error(const PosteriorPair& post) { return std::min(post.p0, post.p1); }

double bayes_risk(const HypothesisPair& pair, double p_10, double p_01) {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(p_10) || !in_unit(p_01)) throw ConfigError("error probabilities must lie in [0, 1]");
  const CostMatrix& c = pair.cost;
  return c.c00 * (1.0 - p_10) * pair.prior0 + c.c10 * p_10 * pair.prior0 +
         c.c01 * p_01 * pair.prior1 + c.c11 * (1.0 - p_01) * pair.prior1;
}

const char* to_string(Hypothesis h) { return h == Hypothesis::h0 ? "H0" : "H1"; }

}  // namespace qdiscrim
