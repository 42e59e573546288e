#include "qdyn/variational.hpp"

#include <Eigen/LU>
#include <cmath>

namespace qdyn {

namespace {

// exp(x) overflows above about 709.8
constexpr double kExponentCeiling = 700.0;

// step rejection: final relative residual above both the floor and growth x the best iterate
constexpr double kResidualFloor = 1e-3;
constexpr double kResidualGrowth = 2.0;

CMatrix exponents(const VariationalState& s) {
  const int n = s.components();
  const auto amp = s.x.rightCols(s.modes());
  CMatrix e = amp.conjugate() * amp.transpose();
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < n; ++k) e(m, k) += std::conj(s.x(m, 0)) + s.x(k, 0);
  return e;
}

}  // namespace

void PolynomialHamiltonian::validate() const {
  require(omega.rows() == omega.cols() && omega.rows() > 0, "hamiltonian: omega must be square and non-empty");
  require((omega - omega.adjoint()).norm() <= 1e-12 * std::max(1.0, omega.norm()), "hamiltonian: omega must be Hermitian");
  require(chi.rows() == omega.rows() && chi.cols() == omega.cols(), "hamiltonian: chi must match omega");
  require((chi - chi.transpose()).norm() <= 1e-12 * std::max(1.0, chi.norm()), "hamiltonian: chi must be symmetric");
}

cplx PolynomialHamiltonian::value(const CVector& b, const CVector& a) const {
  cplx h = b.transpose() * omega * a;
  const CVector ba = b.cwiseProduct(a);
  h += 0.5 * cplx(ba.transpose() * chi.cast<cplx>() * ba);
  return h;
}

CVector PolynomialHamiltonian::gradient(const CVector& b, const CVector& a) const {
  const CVector ba = b.cwiseProduct(a);
  return omega * a + (chi.cast<cplx>() * ba).cwiseProduct(a);
}

PolynomialHamiltonian PolynomialHamiltonian::linear(CMatrix omega) {
  PolynomialHamiltonian h;
  h.chi = RMatrix::Zero(omega.rows(), omega.cols());
  h.omega = std::move(omega);
  h.validate();
  return h;
}

PolynomialHamiltonian PolynomialHamiltonian::kerr(double chi) {
  PolynomialHamiltonian h;
  h.omega = CMatrix::Zero(1, 1);
  h.chi = RMatrix::Constant(1, 1, chi);
  return h;
}

VariationalState coherent_ring(const CVector& target, int components, double radius) {
  require(components >= 1, "coherent_ring: need at least one component");
  require(target.size() >= 1, "coherent_ring: empty target");
  require(radius >= 0.0 && std::isfinite(radius), "coherent_ring: bad radius");
  const auto modes = target.size();
  VariationalState s;
  s.x.resize(components, modes + 1);
  const double a0 = -0.5 * target.squaredNorm() - std::log(static_cast<double>(components));
  for (int n = 0; n < components; ++n) {
    const cplx offset = components == 1 ? cplx(0.0) : std::polar(radius, 2.0 * std::numbers::pi * n / components);
    s.x(n, 0) = a0;
    for (Eigen::Index k = 0; k < modes; ++k) s.x(n, k + 1) = target[k] + offset;
  }
  return s;
}

GramMatrix inner_product_matrix(const VariationalState& state) {
  require(state.components() >= 1 && state.modes() >= 1, "variational state is empty");
  const CMatrix e = exponents(state);
  GramMatrix g;
  const double top = e.real().maxCoeff();
  if (top > kExponentCeiling) g.log_scale = top;
  g.rho = (e.array() - g.log_scale).exp().matrix();
  return g;
}

VariationalSystem variational_system(const VariationalState& state, const PolynomialHamiltonian& hamiltonian) {
  require(hamiltonian.modes() == state.modes(), "variational system: Hamiltonian and state disagree on modes");
  const int n = state.components();
  const int m = state.modes();
  const int width = m + 1;
  const GramMatrix g = inner_product_matrix(state);

  // alpha tilde: 1 in slot 0, alpha_k elsewhere
  CMatrix tilde = state.x;
  tilde.col(0).setOnes();

  VariationalSystem sys;
  sys.log_scale = g.log_scale;
  sys.v.resize(n * width, n * width);
  sys.h = CVector::Zero(n * width);
  for (int a = 0; a < n; ++a) {
    const CVector conj_a = state.amplitudes(a).conjugate();
    for (int b = 0; b < n; ++b) {
      const cplx rho = g.rho(a, b);
      for (int k = 0; k < width; ++k)
        for (int l = 0; l < width; ++l) {
          const double delta = (k == l && k > 0) ? 1.0 : 0.0;
          sys.v(a * width + k, b * width + l) = (delta + std::conj(tilde(a, l)) * tilde(b, k)) * rho;
        }
      const CVector alpha_b = state.amplitudes(b);
      const cplx energy = hamiltonian.value(conj_a, alpha_b);
      const CVector grad = hamiltonian.gradient(conj_a, alpha_b);
      sys.h[a * width] += energy * rho;
      for (int k = 1; k < width; ++k) sys.h[a * width + k] += (grad[k - 1] + energy * alpha_b[k - 1]) * rho;
    }
  }
  return sys;
}

CVector tikhonov_update(const VariationalSystem& system, const CVector& dx, double dt, double lambda) {
  require(lambda > 0.0, "tikhonov: lambda must be positive");
  const auto p = system.v.rows();
  const CVector residual = -kI * (0.5 * dt) * system.h - system.v * dx;
  const CMatrix reg = system.v + kI * lambda * CMatrix::Identity(p, p);
  return dx + reg.partialPivLu().solve(residual);
}

namespace {

CVector flatten(const CMatrix& x) {
  CVector v(x.size());
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) v[r * x.cols() + c] = x(r, c);
  return v;
}

CMatrix unflatten(const CVector& v, Eigen::Index rows, Eigen::Index cols) {
  CMatrix x(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) x(r, c) = v[r * cols + c];
  return x;
}

// Relative midpoint residual |-i dt H/2 - V dX| / |dt H/2|.
double residual(const VariationalSystem& sys, const CVector& dx, double dt) {
  const double scale = 0.5 * dt * sys.h.norm();
  const double r = (-kI * (0.5 * dt) * sys.h - sys.v * dx).norm();
  return scale > 0.0 ? r / scale : r;
}

// One substep; false if rejected. The residual is tracked at every iterate; the step is
// rejected when it ends well above the best iterate, i.e. the fixed-point iteration is diverging.
bool try_step(VariationalState& state, const PolynomialHamiltonian& h, double dt, const PropagationOptions& o,
              double& res) {
  const auto rows = state.x.rows(), cols = state.x.cols();
  const CVector x0 = flatten(state.x);
  CVector dx = CVector::Zero(x0.size());
  VariationalState mid = state;
  double best = std::numeric_limits<double>::infinity();
  for (int p = 0;; ++p) {
    mid.x = unflatten(x0 + dx, rows, cols);
    const auto sys = variational_system(mid, h);
    res = residual(sys, dx, dt);
    if (!std::isfinite(res)) return false;
    if (p == o.iterations) break;
    if (p > 0) best = std::min(best, res);
    dx = tikhonov_update(sys, dx, dt, o.lambda);
  }
  if (res > kResidualFloor && res > kResidualGrowth * best) return false;
  state.x = unflatten(x0 + 2.0 * dx, rows, cols);
  return true;
}

void advance(VariationalState& state, const PolynomialHamiltonian& h, double dt, const PropagationOptions& o,
             int depth, StepReport& report) {
  double res = 0.0;
  VariationalState trial = state;
  if (try_step(trial, h, dt, o, res)) {
    state = std::move(trial);
    report.residual = std::max(report.residual, res);
    return;
  }
  if (depth >= o.max_halvings)
    throw SingularMatrix("variational propagation: step rejected at dt = " + std::to_string(dt) +
                         " after " + std::to_string(depth) + " halvings");
  ++report.substeps;
  advance(state, h, 0.5 * dt, o, depth + 1, report);
  advance(state, h, 0.5 * dt, o, depth + 1, report);
}

}  // namespace

StepReport propagate(VariationalState& state, const PolynomialHamiltonian& hamiltonian,
                     const PropagationOptions& options) {
  require(options.dt > 0.0 && std::isfinite(options.dt), "propagate: dt must be positive");
  require(options.lambda > 0.0, "propagate: lambda must be positive");
  require(options.iterations >= 1, "propagate: need at least one iteration");
  require(hamiltonian.modes() == state.modes(), "propagate: Hamiltonian and state disagree on modes");
  StepReport report;
  advance(state, hamiltonian, options.dt, options, 0, report);
  return report;
}

VariationalObservables observables(const VariationalState& state, const PolynomialHamiltonian& hamiltonian) {
  require(hamiltonian.modes() == state.modes(), "observables: Hamiltonian and state disagree on modes");
  const GramMatrix g = inner_product_matrix(state);
  const cplx total = g.rho.sum();
  require(std::abs(total) > 0.0 && std::isfinite(std::abs(total)), "observables: vanishing norm");
  const int n = state.components();
  const int m = state.modes();
  VariationalObservables out;
  out.a = CVector::Zero(m);
  out.correlation = CMatrix::Zero(m, m);
  cplx energy = 0.0;
  for (int a = 0; a < n; ++a) {
    const CVector conj_a = state.amplitudes(a).conjugate();
    for (int b = 0; b < n; ++b) {
      const CVector alpha_b = state.amplitudes(b);
      const cplx rho = g.rho(a, b);
      out.a += rho * alpha_b;
      out.correlation += rho * conj_a * alpha_b.transpose();
      energy += rho * hamiltonian.value(conj_a, alpha_b);
    }
  }
  out.a /= total;
  out.correlation /= total;
  out.energy = (energy / total).real();
  out.log_norm = std::log(total.real()) + g.log_scale;
  return out;
}

VariationalTrace run_variational(VariationalState state, const PolynomialHamiltonian& hamiltonian,
                                 const PropagationOptions& options, double t_max, int record_every, int mode) {
  hamiltonian.validate();
  require(t_max >= 0.0, "run_variational: negative t_max");
  require(record_every >= 1, "run_variational: record_every must be positive");
  require(mode >= 0 && mode < state.modes(), "run_variational: mode out of range");
  const auto steps = static_cast<long>(std::llround(t_max / options.dt));
  require(std::fabs(steps * options.dt - t_max) <= 1e-9 * std::max(1.0, t_max),
          "run_variational: t_max must be a multiple of dt");
  VariationalTrace trace;
  auto record = [&](double t) {
    const auto o = observables(state, hamiltonian);
    trace.t.push_back(t);
    trace.x.push_back(o.a[mode].real());
    trace.y.push_back(o.a[mode].imag());
    trace.log_norm.push_back(o.log_norm);
    trace.energy.push_back(o.energy);
  };
  record(0.0);
  for (long s = 1; s <= steps; ++s) {
    trace.substeps += propagate(state, hamiltonian, options).substeps;
    if (s % record_every == 0 || s == steps) record(s * options.dt);
  }
  return trace;
}

}  // namespace qdyn
