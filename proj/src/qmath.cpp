#include "qdiscrim/qmath.hpp"

#include <algorithm>
#include <cmath>

namespace qdiscrim {

namespace {

void require_same_dim(const Operator& a, const Operator& b, const char* what) {
  if (a.dim() != b.dim()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                         " vs " + std::to_string(b.dim()) + ")");
  }
}

}  // namespace

Operator::Operator(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) {
    throw DimensionError("operator must be square");
  }
}

Operator Operator::zero(int dim) { return Operator(Matrix::Zero(dim, dim)); }

Operator Operator::identity(int dim) { return Operator(Matrix::Identity(dim, dim)); }

Operator Operator::hermitian(Matrix m) {
  Operator op(std::move(m));
  if (!op.is_hermitian(1e-12)) {
    throw InvalidStateError("operator is not Hermitian (defect " +
                            std::to_string(op.hermiticity_defect()) + ")");
  }
  return op;
}

double Operator::hermiticity_defect() const {
  if (m_.size() == 0) return 0.0;
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

double Operator::max_abs() const {
  if (m_.size() == 0) return 0.0;
  return m_.cwiseAbs().maxCoeff();
}

Operator& Operator::operator+=(const Operator& o) {
  require_same_dim(*this, o, "operator+");
  m_ += o.m_;
  return *this;
}

Operator& Operator::operator-=(const Operator& o) {
  require_same_dim(*this, o, "operator-");
  m_ -= o.m_;
  return *this;
}

Operator& Operator::operator*=(Complex s) {
  m_ *= s;
  return *this;
}

Operator operator*(const Operator& a, const Operator& b) {
  require_same_dim(a, b, "operator*");
  return Operator(a.m_ * b.m_);
}

DensityState DensityState::from_normalized(Operator op) {
  if (op.dim() < 1) throw DimensionError("density state must have dim >= 1");
  if (!op.is_hermitian(1e-12)) throw InvalidStateError("density state is not Hermitian");
  const Complex tr = op.trace();
  if (std::abs(tr.real() - 1.0) > 1e-9 || std::abs(tr.imag()) > 1e-9) {
    throw InvalidStateError("density state trace is not 1");
  }
  if (min_eigenvalue(op) < -1e-8) throw InvalidStateError("density state is not positive");
  return DensityState{std::move(op), true, 0.0};
}

double BlochVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

Operator pauli(PauliAxis axis) {
  Matrix m(2, 2);
  switch (axis) {
    case PauliAxis::x:
      m << 0.0, 1.0, 1.0, 0.0;
      break;
    case PauliAxis::y:
      m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
      break;
    case PauliAxis::z:
      m << 1.0, 0.0, 0.0, -1.0;
      break;
  }
  return Operator(std::move(m));
}

Operator build_hamiltonian(double omega, double delta) {
  if (!std::isfinite(omega) || !std::isfinite(delta)) {
    throw ConfigError("hamiltonian parameters must be finite");
  }
  return pauli(PauliAxis::x) * Complex(omega / 2.0) + pauli(PauliAxis::z) * Complex(delta / 2.0);
}

DensityState bloch_to_density(const BlochVector& b) {
  if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.z) ||
      b.x * b.x + b.y * b.y + b.z * b.z > 1.0 + 1e-9) {
    throw InvalidStateError("Bloch vector lies outside the unit ball");
  }
  Matrix m(2, 2);
  m << 0.5 * (1.0 + b.z), Complex(0.5 * b.x, -0.5 * b.y), Complex(0.5 * b.x, 0.5 * b.y),
      0.5 * (1.0 - b.z);
  DensityState rho{Operator(std::move(m)), true, 0.0};
  // Slightly-outside vectors within tolerance are pulled onto the sphere.
  if (min_eigenvalue(rho.op) < 0.0) rho.op = project_psd(rho.op);
  return rho;
}

BlochVector density_to_bloch(const DensityState& rho) {
  if (rho.dim() != 2) throw DimensionError("Bloch representation needs a 2x2 state");
  const Matrix& m = rho.op.matrix();
  // rho_01 = (x - iy)/2, rho_10 = (x + iy)/2
  return BlochVector{(m(0, 1) + m(1, 0)).real(), (Complex(0.0, 1.0) * (m(0, 1) - m(1, 0))).real(),
                     (m(0, 0) - m(1, 1)).real()};
}

Operator dissipator(const Operator& f, const Operator& rho, Ordering ordering) {
  require_same_dim(f, rho, "dissipator");
  const Matrix& F = f.matrix();
  const Matrix& r = rho.matrix();
  const Matrix g = ordering == Ordering::paper_ffdag ? Matrix(F * F.adjoint())
                                                     : Matrix(F.adjoint() * F);
  return Operator(F * r * F.adjoint() - 0.5 * (g * r + r * g));
}

Operator dissipator(const Operator& f, const DensityState& rho, Ordering ordering) {
  return dissipator(f, rho.op, ordering);
}

MeasurementTerm msuperop(const Operator& f, const Operator& rho) {
  require_same_dim(f, rho, "msuperop");
  Matrix m = f.matrix() * rho.matrix() + rho.matrix() * f.matrix().adjoint();
  const double signal = m.trace().real();
  return MeasurementTerm{Operator(std::move(m)), signal};
}

MeasurementTerm msuperop(const Operator& f, const DensityState& rho) {
  return msuperop(f, rho.op);
}

Operator innovation(const Operator& f, const DensityState& rho) {
  if (!rho.normalized) throw InvalidStateError("innovation requires a normalized state");
  MeasurementTerm m = msuperop(f, rho.op);
  return m.op - rho.op * Complex(m.signal);
}

Operator commutator_term(const Operator& h, const Operator& rho) {
  require_same_dim(h, rho, "commutator");
  const Matrix& H = h.matrix();
  const Matrix& r = rho.matrix();
  return Operator(Complex(0.0, -1.0) * (H * r - r * H));
}

Operator symmetrize(const Operator& a) {
  return Operator(0.5 * (a.matrix() + a.matrix().adjoint()));
}

double min_eigenvalue(const Operator& a) {
  const Matrix& m = a.matrix();
  if (a.dim() == 2) {
    const double p = m(0, 0).real();
    const double q = m(1, 1).real();
    const double off = std::abs(m(0, 1));
    return 0.5 * (p + q) - std::sqrt(0.25 * (p - q) * (p - q) + off * off);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Operator project_psd(const Operator& a) {
  if (a.dim() == 2) {
    // a = (t I + r.sigma)/2 has eigenvalues (t +- |r|)/2.
    const Matrix& m = a.matrix();
    const double t = (m(0, 0) + m(1, 1)).real();
    const double x = (m(0, 1) + m(1, 0)).real();
    const double y = (Complex(0.0, 1.0) * (m(0, 1) - m(1, 0))).real();
    const double z = (m(0, 0) - m(1, 1)).real();
    const double r = std::sqrt(x * x + y * y + z * z);
    if (!(t + r > 0.0)) throw NumericalError("cannot project a state with no positive spectrum");
    const double scale = r > t ? 1.0 / r : 1.0 / t;
    Matrix out(2, 2);
    out << 0.5 * (1.0 + scale * z), Complex(0.5 * scale * x, -0.5 * scale * y),
        Complex(0.5 * scale * x, 0.5 * scale * y), 0.5 * (1.0 - scale * z);
    return Operator(std::move(out));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.matrix());
  Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0);
  const double total = vals.sum();
  if (!(total > 0.0)) throw NumericalError("cannot project a state with no positive spectrum");
  vals /= total;
  const Matrix& v = es.eigenvectors();
  return Operator(v * vals.cast<Complex>().asDiagonal() * v.adjoint());
}

}  // namespace qdiscrim
