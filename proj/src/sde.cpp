#include "qdyn/sde.hpp"

#include <cmath>

namespace qdyn {

SchemeKind parse_scheme_kind(const std::string& name) {
  if (name == "euler") return SchemeKind::euler;
  if (name == "midpoint") return SchemeKind::midpoint;
  throw InvalidInput("unknown scheme '" + name + "' (expected euler|midpoint)");
}

Interpretation parse_interpretation(const std::string& name) {
  if (name == "ito") return Interpretation::ito;
  if (name == "stratonovich") return Interpretation::stratonovich;
  throw InvalidInput("unknown interpretation '" + name + "' (expected ito|stratonovich)");
}

std::string to_string(SchemeKind kind) { return kind == SchemeKind::euler ? "euler" : "midpoint"; }

std::string to_string(Interpretation interpretation) {
  return interpretation == Interpretation::ito ? "ito" : "stratonovich";
}

bool within_ceiling(const CVector& x, double ceiling) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double re = x[i].real(), im = x[i].imag();
    if (!std::isfinite(re) || !std::isfinite(im)) return false;
    if (std::fabs(re) > ceiling || std::fabs(im) > ceiling) return false;
  }
  return true;
}

StepStatus sde_step(const SdeSystem& system, const SdeScheme& scheme, const NoiseStream& stream,
                    std::uint32_t step, double t, CVector& x) {
  const double dt = scheme.dt;
  RVector dW = RVector::Zero(system.noise_count);
  if (system.noise_count > 0) {
    stream.normals(step, system.noise_tag, std::span<double>(dW.data(), dW.size()));
    dW *= std::sqrt(dt / system.cell_volume);
  }

  // Sign of the correction to add to the written drift for this scheme's calculus.
  double correction_sign = 0.0;
  if (system.stratonovich_correction) {
    if (scheme.kind == SchemeKind::midpoint && scheme.interpretation == Interpretation::ito)
      correction_sign = 1.0;
    if (scheme.kind == SchemeKind::euler && scheme.interpretation == Interpretation::stratonovich)
      correction_sign = -1.0;
  }

  CVector drift(x.size()), incr(x.size()), corr(x.size());
  auto increment = [&](double time, const CVector& state, CVector& out) {
    system.drift(time, state, drift);
    out = drift * dt;
    if (correction_sign != 0.0) {
      system.stratonovich_correction(time, state, corr);
      out += correction_sign * dt * corr;
    }
    if (system.noise_count > 0 && system.diffusion) {
      system.diffusion(time, state, dW, incr);
      out += incr;
    }
  };

  CVector delta(x.size());
  if (scheme.kind == SchemeKind::euler) {
    if (system.linear_propagator) system.linear_propagator(t, 0.5 * dt, x);
    increment(t, x, delta);
    x += delta;
    if (system.linear_propagator) system.linear_propagator(t + 0.5 * dt, 0.5 * dt, x);
  } else {
    // Interaction picture centred on the midpoint: x0 is the half-propagated start.
    CVector x0 = x;
    if (system.linear_propagator) system.linear_propagator(t, 0.5 * dt, x0);
    CVector mid = x0;
    const double tm = t + 0.5 * dt;
    for (int it = 0; it < scheme.midpoint_iterations; ++it) {
      increment(tm, mid, delta);
      mid = x0 + 0.5 * delta;
      if (!within_ceiling(mid, scheme.divergence_ceiling)) {
        x = mid;
        return StepStatus::diverged;
      }
    }
    x = 2.0 * mid - x0;
    if (system.linear_propagator) system.linear_propagator(tm, 0.5 * dt, x);
  }
  return within_ceiling(x, scheme.divergence_ceiling) ? StepStatus::ok : StepStatus::diverged;
}

}  // namespace qdyn
