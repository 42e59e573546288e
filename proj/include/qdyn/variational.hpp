#pragma once

#include <numbers>
#include <vector>

#include "qdyn/common.hpp"

namespace qdyn {

// Superpositions of unnormalized multimode coherent states,
//   |psi> = sum_n exp(alpha_0^(n)) ||alpha^(n)>,   ||alpha>> = exp(alpha . a^dag)|0>,
// evolved by the time-dependent variational principle.

/// H(beta^*, alpha) = sum beta_i^* omega_ij alpha_j + 1/2 sum chi_ij beta_i^* beta_j^* alpha_i alpha_j,
/// the symbol of a normally ordered Hamiltonian (chi_ii gives the Kerr term a^dag^2 a^2 / 2).
struct PolynomialHamiltonian {
  CMatrix omega;
  RMatrix chi;

  int modes() const { return static_cast<int>(omega.rows()); }
  void validate() const;

  cplx value(const CVector& beta_conj, const CVector& alpha) const;
  /// dH / d beta_k^*.
  CVector gradient(const CVector& beta_conj, const CVector& alpha) const;

  static PolynomialHamiltonian linear(CMatrix omega);
  /// Single mode H = (chi/2) a^dag a^dag a a.
  static PolynomialHamiltonian kerr(double chi);
};

/// Row n holds (alpha_0, alpha_1, ..., alpha_M) of component n.
struct VariationalState {
  CMatrix x;

  int components() const { return static_cast<int>(x.rows()); }
  int modes() const { return static_cast<int>(x.cols()) - 1; }
  CVector amplitudes(int n) const { return x.row(n).tail(modes()).transpose(); }
};

/// A coherent target split into `components` copies on a ring of radius `radius`, each with
/// alpha_0 = -|target|^2/2 - ln(components).
VariationalState coherent_ring(const CVector& target, int components, double radius = 1e-3);

/// rho^(mn) = exp(alpha_0^(m)* + alpha_0^(n) + alpha^(m)* . alpha^(n) - log_scale), where
/// log_scale is nonzero only when an exponent would overflow.
struct GramMatrix {
  CMatrix rho;
  double log_scale = 0.0;
};

GramMatrix inner_product_matrix(const VariationalState& state);

/// The linear system V dX/dt = -i H of the variational principle, both sides scaled by exp(-log_scale).
struct VariationalSystem {
  CMatrix v;
  CVector h;
  double log_scale = 0.0;
};

VariationalSystem variational_system(const VariationalState& state, const PolynomialHamiltonian& hamiltonian);

/// One regularized fixed-point update dX <- dX + (V + i lambda I)^{-1} (-i dt H / 2 - V dX).
CVector tikhonov_update(const VariationalSystem& system, const CVector& dx, double dt, double lambda);

struct PropagationOptions {
  double dt = 2.0 * std::numbers::pi / 2000.0;
  double lambda = 1e-4;
  int iterations = 4;
  int max_halvings = 12;
};

struct StepReport {
  int substeps = 1;
  double residual = 0.0;  // largest relative midpoint residual among the accepted substeps
};

/// Advances by options.dt with the regularized implicit midpoint rule. A substep whose
/// residual grows over the iterations is rejected and retried as two half steps.
StepReport propagate(VariationalState& state, const PolynomialHamiltonian& hamiltonian,
                     const PropagationOptions& options);

struct VariationalObservables {
  CVector a;            // <a_k>
  CMatrix correlation;  // <a_k^dag a_l>
  double log_norm = 0.0;  // ln <psi|psi>
  double energy = 0.0;
};

VariationalObservables observables(const VariationalState& state, const PolynomialHamiltonian& hamiltonian);

struct VariationalTrace {
  std::vector<double> t, x, y, log_norm, energy;
  int substeps = 0;
};

/// Runs to t_max, recording X = Re<a_mode> and Y = Im<a_mode> every `record_every` steps.
VariationalTrace run_variational(VariationalState state, const PolynomialHamiltonian& hamiltonian,
                                 const PropagationOptions& options, double t_max, int record_every = 1,
                                 int mode = 0);

}  // namespace qdyn
