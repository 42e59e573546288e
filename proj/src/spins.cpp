#include "qdyn/spins.hpp"

#include <cmath>

namespace qdyn {

namespace {

double to_db(double ratio) { return 10.0 * std::log10(ratio); }

// Maps an angle onto (-pi/2, pi/2].
double wrap_half_turn(double theta) {
  while (theta > kPi / 2) theta -= kPi;
  while (theta <= -kPi / 2) theta += kPi;
  return theta;
}

}  // namespace

SpinOperators spin_operators(WellModes well, double delta_theta) {
  const auto a1 = NormalPolynomial::a(well.mode1);
  const auto a2 = NormalPolynomial::a(well.mode2);
  const auto a1d = NormalPolynomial::adag(well.mode1);
  const auto a2d = NormalPolynomial::adag(well.mode2);
  const NormalPolynomial raise = std::polar(1.0, delta_theta) * (a2d * a1);
  const NormalPolynomial lower = raise.adjoint();
  SpinOperators s;
  s.jx = 0.5 * (raise + lower);
  s.jy = cplx(0.0, -0.5) * (raise - lower);
  s.jz = 0.5 * (a2d * a2 - a1d * a1);
  s.number = a2d * a2 + a1d * a1;
  return s;
}

SpinMoments schwinger_spins(const MomentSource& source, const std::vector<WellModes>& wells,
                            std::optional<double> delta_theta) {
  require(!wells.empty(), "schwinger_spins: no wells given");
  SpinMoments out;
  out.wells = static_cast<int>(wells.size());
  const int n = 3 * out.wells;
  std::vector<NormalPolynomial> ops;
  out.number.resize(out.wells);
  for (const auto& w : wells) {
    require(w.mode1 >= 0 && w.mode2 >= 0 && w.mode1 < source.mode_count() &&
                w.mode2 < source.mode_count() && w.mode1 != w.mode2,
            "schwinger_spins: well modes out of range");
    double dtheta = 0.0;
    if (delta_theta) {
      dtheta = *delta_theta;
    } else {
      const cplx coherence = source.moment([&] {
        Monomial m;
        m.create[w.mode2] = 1;
        m.annihilate[w.mode1] = 1;
        return m;
      }());
      dtheta = kPi / 2 - (std::abs(coherence) > 0.0 ? std::arg(coherence) : 0.0);
    }
    out.delta_theta.push_back(dtheta);
    auto s = spin_operators(w, dtheta);
    out.number[static_cast<Eigen::Index>(ops.size() / 3)] = source.expect(s.number).real();
    ops.push_back(std::move(s.jx));
    ops.push_back(std::move(s.jy));
    ops.push_back(std::move(s.jz));
  }
  out.mean.resize(n);
  for (int a = 0; a < n; ++a) out.mean[a] = source.expect(ops[a]).real();
  out.cov.resize(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      const cplx ab = source.expect(ops[a] * ops[b]);
      // the symmetrized product of Hermitian operators is the real part of <AB>
      out.cov(a, b) = out.cov(b, a) = ab.real() - out.mean[a] * out.mean[b];
    }
  return out;
}

SpinMoments schwinger_spins(const StateVector& state, std::optional<double> delta_theta) {
  require(state.basis != nullptr, "schwinger_spins: missing basis");
  const int modes = state.basis->mode_count();
  require(modes == 2 || modes == 4, "schwinger_spins: state must have 2 or 4 modes");
  FockMoments source(state);
  std::vector<WellModes> wells{{0, 1}};
  if (modes == 4) wells.push_back({2, 3});
  return schwinger_spins(source, wells, delta_theta);
}

double variance_at(const SpinMoments& m, int well, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return c * c * m.var_z(well) + s * s * m.var_x(well) + 2.0 * s * c * m.cov_zx(well);
}

ThetaChoice optimal_theta(double var_z, double var_x, double cov_zx) {
  // V(theta) = mean + R cos(2 theta - psi), R cos psi = (var_z - var_x)/2, R sin psi = cov
  const double half_diff = 0.5 * (var_z - var_x);
  if (std::fabs(half_diff) < 1e-14 && std::fabs(cov_zx) < 1e-14) return {0.0, true};
  const double psi = std::atan2(cov_zx, half_diff);
  return {wrap_half_turn(0.5 * (psi + kPi)), false};
}

ThetaChoice optimal_theta(const SpinMoments& m, int well) {
  require(well >= 0 && well < m.wells, "optimal_theta: well out of range");
  return optimal_theta(m.var_z(well), m.var_x(well), m.cov_zx(well));
}

LocalSqueezing local_squeezing(const SpinMoments& m, int well) {
  const auto choice = optimal_theta(m, well);
  LocalSqueezing out;
  out.theta = choice.theta;
  out.isotropic = choice.isotropic;
  out.variance = variance_at(m, well, choice.theta);
  out.variance_perp = variance_at(m, well, choice.theta + kPi / 2);
  out.n0 = std::fabs(m.jy(well)) / 2.0;
  out.s_db = to_db(out.variance / out.n0);
  out.s_perp_db = to_db(out.variance_perp / out.n0);
  out.uncertainty_slack = out.variance * out.variance_perp - m.jy(well) * m.jy(well) / 4.0;
  return out;
}

EntanglementCriteria entanglement_criteria_at(const SpinMoments& m, double theta) {
  require(m.wells == 2, "entanglement_criteria: needs two wells");
  // J_theta = cos J_z + sin J_x, coefficient vectors over (Jx, Jy, Jz)
  auto direction = [](double th) {
    Eigen::Vector3d v;
    v << std::sin(th), 0.0, std::cos(th);
    return v;
  };
  Eigen::VectorXd minus(6), plus(6);
  minus << direction(theta), -direction(theta);
  plus << direction(theta + kPi / 2), direction(theta + kPi / 2);
  EntanglementCriteria out;
  out.theta = theta;
  out.v_minus = minus.dot(m.cov * minus);
  out.v_plus = plus.dot(m.cov * plus);
  out.n0 = 0.5 * (std::fabs(m.jy(0)) + std::fabs(m.jy(1)));
  if (out.n0 < 1e-14) {
    out.defined = false;
    return out;
  }
  out.s_plus_db = to_db(out.v_minus / out.n0);
  out.s_minus_db = to_db(out.v_plus / out.n0);
  out.e_product = std::sqrt(std::max(0.0, out.v_minus * out.v_plus)) / out.n0;
  out.e_sum = (out.v_minus + out.v_plus) / (2.0 * out.n0);
  return out;
}

EntanglementCriteria entanglement_criteria(const SpinMoments& m, CriterionTheta policy) {
  if (policy == CriterionTheta::local_optimal)
    return entanglement_criteria_at(m, optimal_theta(m, 0).theta);
  // grid search followed by golden-section refinement on the bracketing cell
  constexpr int kGrid = 720;
  auto product = [&](double th) {
    const auto c = entanglement_criteria_at(m, th);
    return c.v_minus * c.v_plus;
  };
  double best = -kPi / 2, best_value = product(best);
  for (int k = 1; k < kGrid; ++k) {
    const double th = -kPi / 2 + kPi * k / kGrid;
    const double v = product(th);
    if (v < best_value) {
      best_value = v;
      best = th;
    }
  }
  double lo = best - kPi / kGrid, hi = best + kPi / kGrid;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = product(x1), f2 = product(x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = product(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = product(x2);
    }
  }
  return entanglement_criteria_at(m, wrap_half_turn(0.5 * (lo + hi)));
}

SqueezingParameter squeezing_parameter(const Eigen::Vector3d& mean, const Eigen::Matrix3d& cov,
                                       double number, double floor) {
  SqueezingParameter out;
  out.mean_spin_sq = mean.squaredNorm();
  if (out.mean_spin_sq <= floor) {
    out.defined = false;
    return out;
  }
  const Eigen::Vector3d n = mean.normalized();
  // orthonormal pair spanning the plane orthogonal to the mean spin
  Eigen::Vector3d trial = std::fabs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  const Eigen::Vector3d e1 = (trial - trial.dot(n) * n).normalized();
  const Eigen::Vector3d e2 = n.cross(e1);
  Eigen::Matrix2d plane;
  plane << e1.dot(cov * e1), e1.dot(cov * e2), e2.dot(cov * e1), e2.dot(cov * e2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(plane);
  out.min_variance = solver.eigenvalues()[0];
  out.xi2 = number * out.min_variance / out.mean_spin_sq;
  return out;
}

SqueezingParameter squeezing_parameter(const MomentSource& source, WellModes modes) {
  const auto m = schwinger_spins(source, {modes}, 0.0);
  return squeezing_parameter(m.mean.head<3>(), m.cov.topLeftCorner<3, 3>(), m.number[0]);
}

}  // namespace qdyn
