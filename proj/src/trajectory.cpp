#include "qdiscrim/trajectory.hpp"

#include <cmath>
#include <string>

namespace qdiscrim {

void ModelSpec::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw ConfigError("measurement efficiency eta must lie in (0, 1], got " + std::to_string(eta));
  }
  if (hamiltonian.dim() < 1) throw DimensionError("model has an empty Hamiltonian");
  if (hamiltonian.dim() != measurement.dim()) {
    throw DimensionError("Hamiltonian and measurement operator dimensions differ");
  }
  if (!hamiltonian.is_hermitian(1e-12)) throw ConfigError("Hamiltonian is not Hermitian");
  if (!std::isfinite(measurement.max_abs())) throw ConfigError("measurement operator not finite");
}

ModelSpec ModelSpec::two_level(double omega, double delta, double kappa, double eta,
                               DissipatorScaling scaling, Ordering ordering) {
  if (!std::isfinite(kappa) || kappa < 0.0) {
    throw ConfigError("measurement strength kappa must be finite and non-negative");
  }
  ModelSpec spec{build_hamiltonian(omega, delta), pauli(PauliAxis::z) * Complex(std::sqrt(kappa)),
                 eta, scaling, ordering};
  spec.validate();
  return spec;
}

SimGrid SimGrid::make(double dt, double t_max) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive and finite");
  if (!(t_max >= dt) || !std::isfinite(t_max)) throw ConfigError("t_max must be finite and >= dt");
  return from_steps(dt, static_cast<std::size_t>(std::llround(t_max / dt)));
}

SimGrid SimGrid::from_steps(double dt, std::size_t n_steps) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive and finite");
  SimGrid g;
  g.dt_ = dt;
  g.n_steps_ = n_steps;
  return g;
}

std::size_t SimGrid::index_of(double t) const {
  if (!(t > 0.0)) return 0;
  const auto k = static_cast<std::size_t>(std::llround(t / dt_));
  return k > n_steps_ ? n_steps_ : k;
}

void MeasurementRecord::validate() const {
  if (dY.size() != grid.n_steps()) {
    throw DimensionError("record has " + std::to_string(dY.size()) + " increments but grid has " +
                         std::to_string(grid.n_steps()) + " steps");
  }
  for (double v : dY) {
    if (!std::isfinite(v)) throw NumericalError("record contains a non-finite increment");
  }
}

namespace detail {

/// Precomputed operators for a model at a fixed step size.
class StepKernel {
 public:
  StepKernel(const ModelSpec& model, double dt)
      : h_(model.hamiltonian.matrix()),
        f_(model.measurement.matrix()),
        fd_(f_.adjoint()),
        g_(model.ordering == Ordering::paper_ffdag ? Matrix(f_ * fd_) : Matrix(fd_ * f_)),
        dt_(dt),
        eta_(model.eta),
        sqrt_eta_(std::sqrt(model.eta)),
        dissipator_scale_(model.scaling == DissipatorScaling::eta_scaled ? model.eta : 1.0) {
    model.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive and finite");
  }

  int dim() const { return static_cast<int>(h_.rows()); }
  double dt() const { return dt_; }
  double eta() const { return eta_; }
  double sqrt_eta() const { return sqrt_eta_; }

  /// F r + r F^dagger
  Matrix measure(const Matrix& r) const { return f_ * r + r * fd_; }

  /// -i[H, r] + s D[F] r
  Matrix drift(const Matrix& r) const {
    const Matrix fr = f_ * r;
    return Complex(0.0, -1.0) * (h_ * r - r * h_) +
           dissipator_scale_ * (fr * fd_ - 0.5 * (g_ * r + r * g_));
  }

  void require_dim(const DensityState& s) const {
    if (s.dim() != dim()) throw DimensionError("state and model dimensions differ");
  }

 private:
  Matrix h_, f_, fd_, g_;
  double dt_, eta_, sqrt_eta_, dissipator_scale_;
};

}  // namespace detail

namespace {

using detail::StepKernel;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + what);
}

/// Projects a unit-trace Hermitian operator back onto the PSD cone when an
/// Euler step left it slightly outside.
void repair_positivity(Operator& op, std::size_t* repairs) {
  const double lam = min_eigenvalue(op);
  if (lam < 0.0) {
    if (lam < kDivergenceEigenvalue) {
      throw NumericalError("integration diverged: minimum eigenvalue " + std::to_string(lam));
    }
    op = project_psd(op);
    if (repairs != nullptr) ++*repairs;
  }
}

/// Symmetrize, renormalize and repair a freshly stepped normalized state.
DensityState finish_normalized(const Matrix& next, std::size_t* repairs) {
  Operator op(0.5 * (next + next.adjoint()));
  const double tr = op.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) {
    throw NumericalError("normalized integration produced a non-positive trace");
  }
  op *= Complex(1.0 / tr);
  repair_positivity(op, repairs);
  return DensityState{std::move(op), true, 0.0};
}

/// rho + drift dt + sqrt(eta) (M - m rho) dW, with M and m already evaluated at rho.
DensityState advance_normalized(const StepKernel& k, const Matrix& r, const Matrix& meas,
                                double signal, double dW, std::size_t* repairs) {
  Matrix next = r + k.drift(r) * k.dt() + (k.sqrt_eta() * dW) * (meas - signal * r);
  return finish_normalized(next, repairs);
}

DensityState advance_unnormalized(const StepKernel& k, const DensityState& s, double dY,
                                  std::size_t* repairs) {
  const Matrix& r = s.op.matrix();
  Matrix next = r + k.drift(r) * k.dt() + (k.sqrt_eta() * dY) * k.measure(r);
  Operator op(0.5 * (next + next.adjoint()));
  const double tr = op.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) {
    throw NumericalError("unnormalized trace became non-positive; reduce dt");
  }
  op *= Complex(1.0 / tr);
  // The repair only touches the rescaled direction; the accumulated trace is kept.
  repair_positivity(op, repairs);
  return DensityState{std::move(op), false, s.log_trace + std::log(tr)};
}

void require_normalized(const DensityState& rho) {
  if (!rho.normalized) throw InvalidStateError("expected a normalized state");
}

}  // namespace

DensityState step_normalized(const DensityState& rho, const ModelSpec& model, double dt, double dW,
                             std::size_t* repairs) {
  require_normalized(rho);
  require_finite(dW, "Wiener increment");
  const StepKernel k(model, dt);
  k.require_dim(rho);
  const Matrix& r = rho.op.matrix();
  const Matrix meas = k.measure(r);
  return advance_normalized(k, r, meas, meas.trace().real(), dW, repairs);
}

DensityState step_unnormalized(const DensityState& rho_tilde, const ModelSpec& model, double dt,
                               double dY, std::size_t* repairs) {
  require_finite(dY, "record increment");
  const StepKernel k(model, dt);
  k.require_dim(rho_tilde);
  const double tr = rho_tilde.op.trace().real();
  if (!(tr > 0.0)) throw InvalidStateError("unnormalized state must have positive trace");
  DensityState start = rho_tilde;
  if (tr != 1.0) {
    start.op *= Complex(1.0 / tr);
    start.log_trace += std::log(tr);
  }
  return advance_unnormalized(k, start, dY, repairs);
}

TruthSimulator::TruthSimulator(const ModelSpec& model, DensityState rho0, double dt)
    : kernel_(std::make_shared<const StepKernel>(model, dt)), state_(std::move(rho0)) {
  require_normalized(state_);
  kernel_->require_dim(state_);
}

double TruthSimulator::advance(double dW) {
  require_finite(dW, "Wiener increment");
  const StepKernel& k = *kernel_;
  const Matrix& r = state_.op.matrix();
  const Matrix meas = k.measure(r);
  const double m = meas.trace().real();
  const double dY = k.sqrt_eta() * m * k.dt() + dW;
  loglik_ += k.sqrt_eta() * m * dY - 0.5 * k.eta() * m * m * k.dt();
  state_ = advance_normalized(k, r, meas, m, dW, &repairs_);
  return dY;
}

LikelihoodFilter::LikelihoodFilter(const ModelSpec& model, DensityState rho0, double dt,
                                   LoglikMode mode)
    : kernel_(std::make_shared<const StepKernel>(model, dt)), state_(std::move(rho0)), mode_(mode) {
  require_normalized(state_);
  kernel_->require_dim(state_);
}

void LikelihoodFilter::update(double dY) {
  require_finite(dY, "record increment");
  const StepKernel& k = *kernel_;
  const Matrix& r = state_.op.matrix();
  const Matrix meas = k.measure(r);
  const double m = meas.trace().real();
  loglik_ += k.sqrt_eta() * m * dY;
  if (mode_ == LoglikMode::ito_corrected) loglik_ -= 0.5 * k.eta() * m * m * k.dt();
  // Innovation under this filter's own model; the truth's dW is never seen.
  const double innovation = dY - k.sqrt_eta() * m * k.dt();
  state_ = advance_normalized(k, r, meas, m, innovation, &repairs_);
}

UnnormalizedFilter::UnnormalizedFilter(const ModelSpec& model, DensityState rho0, double dt)
    : kernel_(std::make_shared<const StepKernel>(model, dt)), state_(std::move(rho0)) {
  kernel_->require_dim(state_);
  const double tr = state_.op.trace().real();
  if (!(tr > 0.0)) throw InvalidStateError("initial state must have positive trace");
  state_.op *= Complex(1.0 / tr);
  state_.log_trace += std::log(tr);
  state_.normalized = false;
}

void UnnormalizedFilter::update(double dY) {
  require_finite(dY, "record increment");
  state_ = advance_unnormalized(*kernel_, state_, dY, &repairs_);
}

SimulationResult simulate_record(const ModelSpec& model, const DensityState& rho0,
                                 const SimGrid& grid, const NoiseSource& noise) {
  TruthSimulator sim(model, rho0, grid.dt());
  SimulationResult out;
  out.record.grid = grid;
  out.record.dY.reserve(grid.n_steps());
  out.truth.states.reserve(grid.n_points());
  out.truth.loglik.reserve(grid.n_points());
  out.truth.states.push_back(sim.state());
  out.truth.loglik.push_back(0.0);
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    out.record.dY.push_back(sim.advance(noise(grid.dt())));
    out.truth.states.push_back(sim.state());
    out.truth.loglik.push_back(sim.loglik());
  }
  out.truth.repairs = sim.repairs();
  return out;
}

FilterPath filter(const MeasurementRecord& record, const ModelSpec& model,
                  const DensityState& rho0, LoglikMode mode) {
  record.validate();
  LikelihoodFilter f(model, rho0, record.grid.dt(), mode);
  FilterPath path;
  path.mode = mode;
  path.states.reserve(record.grid.n_points());
  path.loglik.reserve(record.grid.n_points());
  path.states.push_back(f.state());
  path.loglik.push_back(0.0);
  for (double dY : record.dY) {
    f.update(dY);
    path.states.push_back(f.state());
    path.loglik.push_back(f.loglik());
  }
  path.repairs = f.repairs();
  return path;
}

std::vector<double> trace_likelihood(const MeasurementRecord& record, const ModelSpec& model,
                                     const DensityState& rho0) {
  record.validate();
  require_normalized(rho0);
  UnnormalizedFilter f(model, rho0, record.grid.dt());
  std::vector<double> out;
  out.reserve(record.grid.n_points());
  out.push_back(f.loglik());
  for (double dY : record.dY) {
    f.update(dY);
    out.push_back(f.loglik());
  }
  return out;
}

}  // namespace qdiscrim
