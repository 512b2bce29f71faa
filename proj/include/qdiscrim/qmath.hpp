#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "qdiscrim/errors.hpp"

namespace qdiscrim {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

/// Square complex matrix. Storage is Eigen's; `entry(i, j)` addresses
/// row i, column j.
class Operator {
 public:
  Operator() = default;
  explicit Operator(Matrix m);

  static Operator zero(int dim);
  static Operator identity(int dim);
  /// Builds an operator that must be Hermitian to 1e-12; throws otherwise.
  static Operator hermitian(Matrix m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  Complex entry(int row, int col) const { return m_(row, col); }

  Complex trace() const { return m_.trace(); }
  Operator adjoint() const { return Operator(m_.adjoint()); }
  /// max |A - A^dagger| over entries.
  double hermiticity_defect() const;
  bool is_hermitian(double tol = 1e-12) const { return hermiticity_defect() <= tol; }
  /// max |A_ij| over entries.
  double max_abs() const;

  Operator& operator+=(const Operator& o);
  Operator& operator-=(const Operator& o);
  Operator& operator*=(Complex s);

  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
  friend Operator operator*(Operator a, Complex s) { return a *= s; }
  friend Operator operator*(Complex s, Operator a) { return a *= s; }
  friend Operator operator*(const Operator& a, const Operator& b);

 private:
  Matrix m_;
};

/// Density matrix, either normalized (rho) or an unnormalized state whose
/// accumulated trace lives in `log_trace`. Unnormalized states are stored
/// rescaled to unit trace; the true trace is exp(log_trace).
struct DensityState {
  Operator op;
  bool normalized = true;
  double log_trace = 0.0;

  int dim() const { return op.dim(); }

  /// Wraps a normalized state; validates Hermiticity, trace and positivity.
  static DensityState from_normalized(Operator op);
};

struct BlochVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
};

enum class PauliAxis { x, y, z };

/// Anticommutator ordering inside the dissipator. `paper_ffdag` uses F F^dagger,
/// `standard_fdagf` the Lindblad F^dagger F. They agree for Hermitian F.
enum class Ordering { paper_ffdag, standard_fdagf };

Operator pauli(PauliAxis axis);

/// (omega/2) sigma_x + (delta/2) sigma_z, frequencies in units of gamma.
Operator build_hamiltonian(double omega, double delta);

DensityState bloch_to_density(const BlochVector& b);
BlochVector density_to_bloch(const DensityState& rho);

/// D[F]rho = F rho F^dagger - (G rho + rho G)/2 with G = F F^dagger or F^dagger F.
Operator dissipator(const Operator& f, const Operator& rho,
                    Ordering ordering = Ordering::paper_ffdag);
Operator dissipator(const Operator& f, const DensityState& rho,
                    Ordering ordering = Ordering::paper_ffdag);

struct MeasurementTerm {
  Operator op;    // F rho + rho F^dagger
  double signal;  // Tr(F rho + rho F^dagger)
};

MeasurementTerm msuperop(const Operator& f, const Operator& rho);
MeasurementTerm msuperop(const Operator& f, const DensityState& rho);

/// M[F]rho - Tr(M[F]rho) rho. Requires a normalized state.
Operator innovation(const Operator& f, const DensityState& rho);

/// -i[H, rho]
Operator commutator_term(const Operator& h, const Operator& rho);

/// (A + A^dagger)/2
Operator symmetrize(const Operator& a);

/// Smallest eigenvalue of a Hermitian operator (closed form for 2x2).
double min_eigenvalue(const Operator& a);

/// Clips negative eigenvalues of a Hermitian operator and renormalizes to unit trace.
Operator project_psd(const Operator& a);

}  // namespace qdiscrim
