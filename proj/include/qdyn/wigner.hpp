#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qdyn/ensemble.hpp"
#include "qdyn/lattice.hpp"
#include "qdyn/sde.hpp"
#include "qdyn/spins.hpp"

namespace qdyn {

// Fields are stored as mode amplitudes alpha_m = phi_s(x_m) sqrt(dV), so |alpha_m|^2 counts
// atoms in a cell. Interaction and loss rates are given in field units and rescaled here.

/// Local p-body loss removing l_s atoms of spin s per event, O = prod_s Psi_s^{l_s}.
struct LossChannel {
  std::vector<int> multiplicity;  // l, one entry per spin
  double rate = 0.0;              // kappa in field units

  int order() const;
  void validate(int spin_count) const;
};

struct WignerOptions {
  /// Subtract the symmetric-ordering terms from the interaction drift, so that the
  /// drift derives from the Weyl symbol of the normally ordered Hamiltonian.
  bool symmetric_correction = true;
  std::vector<LossChannel> losses;
  SdeScheme scheme;
};

/// Truncated Wigner equations of one lattice model as an SDE system.
class WignerSystem {
 public:
  WignerSystem(std::shared_ptr<const HubbardModel> model, WignerOptions options);
  WignerSystem(const WignerSystem&) = delete;
  WignerSystem& operator=(const WignerSystem&) = delete;

  const HubbardModel& model() const { return *model_; }
  const WignerOptions& options() const { return options_; }
  const SdeSystem& sde() const { return sde_; }

  /// Hamiltonian part of d alpha / dt, i d alpha_m/dt = omega_mn alpha_n + chi (|alpha|^2 - c) alpha_m.
  void hamiltonian_drift(double t, const CVector& alpha, CVector& out) const;
  /// Loss drift -Gamma_m = -sum kappa (dO/d alpha_m)^* O.
  void loss_drift(const CVector& alpha, CVector& out) const;
  /// Weyl-symbol energy whose gradient generates the Hamiltonian drift.
  double energy(const CVector& alpha, double t = 0.0) const;

  StepStatus step(CVector& alpha, double t, std::uint32_t step, const NoiseStream& stream) const;

 private:
  struct ScaledChannel {
    std::vector<int> multiplicity;
    double rate;  // per-cell units
  };
  void loss_noise(const CVector& alpha, const RVector& dW, CVector& incr) const;
  void loss_correction(const CVector& alpha, CVector& out) const;

  std::shared_ptr<const HubbardModel> model_;
  WignerOptions options_;
  RMatrix chi_cell_;
  std::vector<double> kinetic_;
  bool has_linear_ = true;
  std::vector<ScaledChannel> channels_;
  SdeSystem sde_;
};

/// alpha = alpha0 + delta with complex Gaussian delta, <delta delta^*> = 1/2 per mode.
CVector sample_initial_wigner(const CVector& mean_field, const NoiseStream& stream);

/// Per-trajectory observables, by name:
///   a[m]    complex amplitude of mode m (its mean is <a_m>)
///   X[m]    Re alpha_m, the quadrature (a + a^dag)/2
///   n[m]    |alpha_m|^2 - 1/2
///   N[s]    atoms of spin s, sum over cells of |alpha|^2 - 1/2
///   N       all atoms
///   energy  Weyl-symbol energy
///   spin    expands to the raw moments needed for xi^2 (two spins only)
std::vector<std::string> expand_wigner_observables(const std::vector<std::string>& names);

struct WignerProblemSpec {
  std::shared_ptr<const HubbardModel> model;
  CVector initial;  // coherent mean field per mode
  WignerOptions options;
  std::vector<std::string> observables{"N"};
};

/// Throws InvalidInput for a missing model, a mismatched initial field or an unknown observable.
void validate_problem(const WignerProblemSpec& spec);
EnsembleResult run_wigner(const WignerProblemSpec& spec, EnsembleConfig config);

/// Names of the raw spin moments produced by the "spin" observable, in order.
const std::vector<std::string>& wigner_spin_moment_names();

/// xi^2 from symmetric-order Wigner averages of the spin moments (in the order of
/// wigner_spin_moment_names), converted to physical covariances for `cells` cells.
SqueezingParameter wigner_xi2(std::span<const double> raw_moments, int cells);

/// xi^2 at one measurement time with a jackknife error (run with config.groups >= 2).
struct Xi2Estimate {
  double xi2 = 0.0;
  double error = 0.0;
  bool defined = true;
};
Xi2Estimate wigner_xi2(const EnsembleResult& result, std::size_t time, int cells);

}  // namespace qdyn
