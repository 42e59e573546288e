#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qdyn/ensemble.hpp"
#include "qdyn/lattice.hpp"
#include "qdyn/sde.hpp"

namespace qdyn {

// Positive-P dynamics in the doubled phase space (alpha, beta), with beta playing the role
// of alpha^*. Amplitudes are per-cell mode amplitudes, as in the Wigner engine.

struct PlusPTrajectory {
  CVector alpha;
  CVector beta;
  cplx log_weight = 0.0;  // ln Omega

  cplx weight() const { return std::exp(log_weight); }
};

enum class StateFamily { coherent, thermal, fock };

StateFamily parse_state_family(const std::string& name);
std::string to_string(StateFamily family);

/// Product state over modes. `amplitude` holds coherent amplitudes; `occupation` holds the
/// thermal mean or the Fock number per mode.
struct InitialState {
  StateFamily family = StateFamily::coherent;
  CVector amplitude;
  std::vector<double> occupation;

  int mode_count() const;
  void validate() const;

  static InitialState coherent(CVector amplitude);
  static InitialState thermal(std::vector<double> mean_occupation);
  static InitialState fock(std::vector<int> occupation);
};

enum class PlusPSampling {
  canonical,  // P ~ exp(-|alpha - beta^*|^2 / 4) <mu|rho|mu>, mu = (alpha + beta^*)/2
  delta,      // narrowest classical P: exact for coherent, Glauber P for thermal
};

PlusPSampling parse_plusp_sampling(const std::string& name);
std::string to_string(PlusPSampling sampling);

PlusPTrajectory sample_plusp(const InitialState& state, PlusPSampling sampling, const NoiseStream& stream);

/// Drift gauge g_j (one complex entry per real noise). The drift gains -B g and
/// d ln Omega = g.dW - g.g dt / 2. Without `stratonovich_log_weight` the gauge is taken
/// to be independent of the phase-space point.
struct PlusPGauge {
  std::function<void(double t, const CVector& alpha, const CVector& beta, CVector& g)> function;
  std::function<cplx(double t, const CVector& alpha, const CVector& beta)> stratonovich_log_weight;
};

struct PlusPOptions {
  SdeScheme scheme;
  /// Flip the sign of the Hamiltonian from this time on (must be a multiple of dt).
  std::optional<double> reversal_time;
  std::optional<PlusPGauge> gauge;
};

/// The +P equations of one lattice model:
///   d alpha_s = -i[(omega alpha)_s + sum_u chi_su alpha_u beta_u alpha_s] dt + sqrt(-i) alpha_s (L dW)_s
///   d beta_s  = +i[(omega^* beta)_s + sum_u chi_su alpha_u beta_u beta_s] dt + sqrt(+i) beta_s (L dW')_s
/// with chi = L L^T per cell, read as Ito equations.
class PlusPSystem {
 public:
  PlusPSystem(std::shared_ptr<const HubbardModel> model, PlusPOptions options);
  PlusPSystem(const PlusPSystem&) = delete;
  PlusPSystem& operator=(const PlusPSystem&) = delete;

  const HubbardModel& model() const { return *model_; }
  const PlusPOptions& options() const { return options_; }
  const SdeSystem& sde() const { return sde_; }
  int noise_count() const { return sde_.noise_count; }

  /// State vector layout used by the stepper: [alpha, beta, ln Omega].
  CVector pack(const PlusPTrajectory& traj) const;
  void unpack(const CVector& x, PlusPTrajectory& traj) const;

  /// +1 before the reversal time, -1 after.
  double hamiltonian_sign(double t) const;

  StepStatus step(PlusPTrajectory& traj, double t, std::uint32_t step, const NoiseStream& stream) const;

 private:
  void drift(double t, const CVector& x, CVector& out) const;
  void diffusion(double t, const CVector& x, const RVector& dW, CVector& incr) const;
  void correction(double t, const CVector& x, CVector& out) const;
  // B(x) g for the gauge drift, written into the alpha and beta blocks of out.
  void apply_noise_matrix(double t, const CVector& x, const CVector& g, CVector& out) const;

  std::shared_ptr<const HubbardModel> model_;
  PlusPOptions options_;
  RMatrix chi_cell_;
  CMatrix noise_factor_;  // L with L L^T = chi_cell
  std::vector<double> kinetic_;
  // how the single-particle part is integrated
  enum class Linear { none, drift, kinetic, dense } linear_ = Linear::drift;
  CMatrix half_step_;  // exp(-i omega dt/2) for the dense mode
  SdeSystem sde_;
};

/// prod_i beta_{creation_i} prod_j alpha_{annihilation_j}, the phase-space image of a
/// normally ordered product.
cplx normally_ordered_product(const PlusPTrajectory& traj, const std::vector<int>& creation,
                              const std::vector<int>& annihilation);

/// Observables, by name (all multiplied by Omega):
///   a[m]      alpha_m, the mean is <a_m>
///   ad[m]     beta_m
///   n[m]      beta_m alpha_m
///   X[m]      (alpha_m + beta_m)/2
///   Y[m]      (alpha_m - beta_m)/(2i)
///   N[s], N   atom numbers
///   moment[c,..|a,..]  beta_c.. alpha_a.., e.g. moment[0,0|0,0] for <a^dag a^dag a a>
///   alpha2[m] |alpha_m|^2, a spread measure with no physical meaning
///   weight    Omega
struct PlusPProblemSpec {
  std::shared_ptr<const HubbardModel> model;
  InitialState initial;
  PlusPSampling sampling = PlusPSampling::canonical;
  PlusPOptions options;
  std::vector<std::string> observables{"N"};
};

void validate_problem(const PlusPProblemSpec& spec);
EnsembleResult run_plusp(const PlusPProblemSpec& spec, EnsembleConfig config);

struct TimeReversalReport {
  std::vector<double> times;
  std::vector<double> x_mean;
  std::vector<double> x_error;
  double initial_x = 0.0;
  double residual = 0.0;       // |<X>(2 tau_r) - X(0)|
  double final_error = 0.0;    // error bar at 2 tau_r
  double initial_spread = 0.0;  // <|alpha|^2> - |<alpha>|^2
  double final_spread = 0.0;
  bool inconclusive = false;   // final error bar above the ceiling
  bool recovered = false;      // residual within two error bars
};

/// Evolves mode `mode` to tau_r, flips the Hamiltonian and evolves to 2 tau_r.
/// `config.times` is replaced by a uniform grid of `samples` intervals on [0, 2 tau_r].
TimeReversalReport time_reversal_test(PlusPProblemSpec spec, EnsembleConfig config, double reversal_time,
                                      int samples = 20, int mode = 0, double error_ceiling = 1.0);

}  // namespace qdyn
