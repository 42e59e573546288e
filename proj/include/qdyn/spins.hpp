#pragma once

#include <optional>
#include <vector>

#include "qdyn/common.hpp"
#include "qdyn/moments.hpp"

namespace qdyn {

/// Two internal-state modes of one well, (a1, a2).
struct WellModes {
  int mode1 = 0;
  int mode2 = 1;
};

/// Schwinger spin J_x = (a2^dag a1 e^{i dtheta} + h.c.)/2, J_y = (a2^dag a1 e^{i dtheta} - h.c.)/2i,
/// J_z = (N2 - N1)/2 for each well.
struct SpinMoments {
  int wells = 0;
  RVector mean;  // (Jx, Jy, Jz) per well, 3 * wells entries
  RMatrix cov;   // symmetrized covariance <{J_a, J_b}>/2 - <J_a><J_b>
  std::vector<double> delta_theta;
  RVector number;  // <N1 + N2> per well

  double var_z(int well) const { return cov(3 * well + 2, 3 * well + 2); }
  double var_x(int well) const { return cov(3 * well, 3 * well); }
  double cov_zx(int well) const { return cov(3 * well + 2, 3 * well); }
  double jy(int well) const { return mean[3 * well + 1]; }
};

/// Spin operators of one well as normally ordered polynomials.
struct SpinOperators {
  NormalPolynomial jx, jy, jz, number;
};
SpinOperators spin_operators(WellModes well, double delta_theta);

/// Spin means and covariances. Without an explicit `delta_theta` each well uses
/// pi/2 - arg<a2^dag a1>, which puts the mean spin along J_y.
SpinMoments schwinger_spins(const MomentSource& source, const std::vector<WellModes>& wells,
                            std::optional<double> delta_theta = std::nullopt);

/// Convenience for states on (a1, a2) or (a1, a2, b1, b2).
SpinMoments schwinger_spins(const StateVector& state,
                            std::optional<double> delta_theta = std::nullopt);

/// Var(cos(theta) J_z + sin(theta) J_x) in one well.
double variance_at(const SpinMoments& m, int well, double theta);

struct ThetaChoice {
  double theta = 0.0;
  bool isotropic = false;
};

/// Minimizer over (-pi/2, pi/2] of var_z cos^2 + var_x sin^2 + 2 cov sin cos.
ThetaChoice optimal_theta(double var_z, double var_x, double cov_zx);
ThetaChoice optimal_theta(const SpinMoments& m, int well = 0);

struct LocalSqueezing {
  double theta = 0.0;
  double variance = 0.0;       // Var J(theta)
  double variance_perp = 0.0;  // Var J(theta + pi/2)
  double n0 = 0.0;             // |<J_y>| / 2
  double s_db = 0.0;
  double s_perp_db = 0.0;
  bool isotropic = false;
  /// Var J(theta) Var J(theta + pi/2) - <J_y>^2 / 4, non-negative for physical states.
  double uncertainty_slack = 0.0;
};

LocalSqueezing local_squeezing(const SpinMoments& m, int well = 0);

enum class CriterionTheta {
  minimize_product,  // theta minimizing E_product
  local_optimal,     // optimal squeezing angle of well A alone
};

struct EntanglementCriteria {
  double theta = 0.0;
  double v_minus = 0.0;  // Var(J_theta^A - J_theta^B)
  double v_plus = 0.0;   // Var(J_{theta+pi/2}^A + J_{theta+pi/2}^B)
  double n0 = 0.0;       // (|<J_y^A>| + |<J_y^B>|) / 2
  double s_plus_db = 0.0;
  double s_minus_db = 0.0;
  double e_product = 0.0;
  double e_sum = 0.0;
  bool defined = true;  // false when n0 vanishes
};

EntanglementCriteria entanglement_criteria(const SpinMoments& m,
                                           CriterionTheta policy = CriterionTheta::minimize_product);
EntanglementCriteria entanglement_criteria_at(const SpinMoments& m, double theta);

struct SqueezingParameter {
  double xi2 = 0.0;
  double min_variance = 0.0;  // in the plane orthogonal to the mean spin
  double mean_spin_sq = 0.0;
  bool defined = true;
};

/// xi^2 = N dS^2_min / |<S>|^2 from a mean spin vector, its symmetrized covariance and N.
SqueezingParameter squeezing_parameter(const Eigen::Vector3d& mean, const Eigen::Matrix3d& cov,
                                       double number, double floor = 1e-12);

/// xi^2 of two modes computed from exact moments.
SqueezingParameter squeezing_parameter(const MomentSource& source, WellModes modes);

}  // namespace qdyn
