#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "qdiscrim/qmath.hpp"

namespace qdiscrim {

/// Whether the dissipator is scaled by the detection efficiency eta
/// (as printed in the unnormalized SME) or left at unit strength.
enum class DissipatorScaling { eta_scaled, unit };

/// Log-likelihood increment: `ito_corrected` uses sqrt(eta) m dY - eta m^2 dt / 2,
/// `paper_literal` drops the second term.
enum class LoglikMode { ito_corrected, paper_literal };

/// Most negative eigenvalue a normalized state may reach after one Euler step
/// before integration is declared diverged. Smaller excursions are repaired.
inline constexpr double kDivergenceEigenvalue = -0.05;

/// Dynamical model of one hypothesis. Frequencies in units of gamma, F in sqrt(gamma).
struct ModelSpec {
  Operator hamiltonian;
  Operator measurement;
  double eta = 1.0;
  DissipatorScaling scaling = DissipatorScaling::eta_scaled;
  Ordering ordering = Ordering::paper_ffdag;

  int dim() const { return hamiltonian.dim(); }
  /// Throws ConfigError / DimensionError when an invariant is broken.
  void validate() const;

  /// Two-level model H = (omega sigma_x + delta sigma_z)/2, F = sqrt(kappa) sigma_z.
  static ModelSpec two_level(double omega, double delta, double kappa, double eta,
                             DissipatorScaling scaling = DissipatorScaling::eta_scaled,
                             Ordering ordering = Ordering::paper_ffdag);
};

class SimGrid {
 public:
  SimGrid() = default;
  /// n_steps = round(t_max / dt); requires 0 < dt <= t_max.
  static SimGrid make(double dt, double t_max);
  /// Grid with an explicit step count; zero steps is allowed (a single point at t = 0).
  static SimGrid from_steps(double dt, std::size_t n_steps);

  double dt() const { return dt_; }
  double t_max() const { return dt_ * static_cast<double>(n_steps_); }
  std::size_t n_steps() const { return n_steps_; }
  std::size_t n_points() const { return n_steps_ + 1; }
  double time(std::size_t k) const { return dt_ * static_cast<double>(k); }
  /// Index of the grid point closest to t (clamped to the grid).
  std::size_t index_of(double t) const;

  friend bool operator==(const SimGrid&, const SimGrid&) = default;

 private:
  double dt_ = 1e-3;
  std::size_t n_steps_ = 0;
};

struct MeasurementRecord {
  SimGrid grid;
  std::vector<double> dY;

  /// Length must equal grid.n_steps() and every entry must be finite.
  void validate() const;
};

struct FilterPath {
  std::vector<DensityState> states;
  std::vector<double> loglik;
  LoglikMode mode = LoglikMode::ito_corrected;
  std::size_t repairs = 0;
};

/// Source of Wiener increments; called with dt, returns dW.
using NoiseSource = std::function<double(double dt)>;

/// One Euler-Maruyama step of the normalized SME driven by the Wiener increment dW.
/// `repairs` is incremented when the PSD projection was applied.
DensityState step_normalized(const DensityState& rho, const ModelSpec& model, double dt, double dW,
                             std::size_t* repairs = nullptr);

/// One Euler-Maruyama step of the linear (unnormalized) SME driven by the record increment dY.
/// The result is rescaled to unit trace with the factor folded into log_trace, and
/// repaired onto the PSD cone like the normalized step.
DensityState step_unnormalized(const DensityState& rho_tilde, const ModelSpec& model, double dt,
                               double dY, std::size_t* repairs = nullptr);

namespace detail {
class StepKernel;
}  // namespace detail

/// Normalized SME driven by a noise source; produces the observed signal.
class TruthSimulator {
 public:
  TruthSimulator(const ModelSpec& model, DensityState rho0, double dt);

  /// Emits dY = sqrt(eta) Tr(M[F]rho) dt + dW from the current state, then advances with dW.
  double advance(double dW);

  const DensityState& state() const { return state_; }
  /// Ito log-likelihood of the record under the generating model.
  double loglik() const { return loglik_; }
  std::size_t repairs() const { return repairs_; }

 private:
  std::shared_ptr<const detail::StepKernel> kernel_;
  DensityState state_;
  double loglik_ = 0.0;
  std::size_t repairs_ = 0;
};

/// Normalized-state filter that accumulates the log-likelihood of a record.
class LikelihoodFilter {
 public:
  LikelihoodFilter(const ModelSpec& model, DensityState rho0, double dt,
                   LoglikMode mode = LoglikMode::ito_corrected);

  void update(double dY);

  const DensityState& state() const { return state_; }
  double loglik() const { return loglik_; }
  std::size_t repairs() const { return repairs_; }

 private:
  std::shared_ptr<const detail::StepKernel> kernel_;
  DensityState state_;
  LoglikMode mode_;
  double loglik_ = 0.0;
  std::size_t repairs_ = 0;
};

/// Linear SME integrator; log Tr(rho_tilde) is the log-likelihood.
class UnnormalizedFilter {
 public:
  UnnormalizedFilter(const ModelSpec& model, DensityState rho0, double dt);

  void update(double dY);

  const DensityState& state() const { return state_; }
  double loglik() const { return state_.log_trace; }
  std::size_t repairs() const { return repairs_; }

 private:
  std::shared_ptr<const detail::StepKernel> kernel_;
  DensityState state_;
  std::size_t repairs_ = 0;
};

struct SimulationResult {
  FilterPath truth;
  MeasurementRecord record;
};

SimulationResult simulate_record(const ModelSpec& model, const DensityState& rho0,
                                 const SimGrid& grid, const NoiseSource& noise);

FilterPath filter(const MeasurementRecord& record, const ModelSpec& model,
                  const DensityState& rho0, LoglikMode mode = LoglikMode::ito_corrected);

/// log Tr(rho_tilde_t) at every grid point, from the linear SME.
std::vector<double> trace_likelihood(const MeasurementRecord& record, const ModelSpec& model,
                                     const DensityState& rho0);

}  // namespace qdiscrim
