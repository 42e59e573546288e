#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "qdyn/common.hpp"
#include "qdyn/rng.hpp"

namespace qdyn {

enum class SchemeKind { euler, midpoint };

/// How the written SDE is read. Euler naturally integrates Ito equations and the
/// midpoint scheme Stratonovich ones; the stepper adds the Ito/Stratonovich drift
/// correction whenever the two differ.
enum class Interpretation { ito, stratonovich };

struct SdeScheme {
  SchemeKind kind = SchemeKind::midpoint;
  double dt = 1e-3;
  int midpoint_iterations = 4;
  Interpretation interpretation = Interpretation::ito;
  double divergence_ceiling = 1e6;
};

SchemeKind parse_scheme_kind(const std::string& name);
Interpretation parse_interpretation(const std::string& name);
std::string to_string(SchemeKind kind);
std::string to_string(Interpretation interpretation);

/// A complex-valued SDE dx = a(x,t) dt + B(x,t) dW with real Wiener increments dW.
struct SdeSystem {
  int noise_count = 0;
  /// Ito drift a(x, t). Excludes the part handled by `linear_propagator` when that is set.
  std::function<void(double t, const CVector& x, CVector& drift)> drift;
  /// incr = B(x, t) dW.
  std::function<void(double t, const CVector& x, const RVector& dW, CVector& incr)> diffusion;
  /// Stratonovich drift minus Ito drift, -1/2 sum_jk b_kj d b_ij / d x_k. Unset means additive noise.
  std::function<void(double t, const CVector& x, CVector& correction)> stratonovich_correction;
  /// Optional exact propagator of a linear part from t to t + h: x <- exp(L h) x.
  std::function<void(double t, double h, CVector& x)> linear_propagator;
  /// Slot layout of the real noises; dW_j = sqrt(dt / cell_volume) * N(0,1).
  double cell_volume = 1.0;
  NoiseTag noise_tag = NoiseTag::dynamics;
};

enum class StepStatus { ok, diverged };

/// Advances x by one scheme.dt step. `step` indexes the noise counter.
StepStatus sde_step(const SdeSystem& system, const SdeScheme& scheme, const NoiseStream& stream,
                    std::uint32_t step, double t, CVector& x);

/// True when every entry is finite and within the divergence ceiling.
bool within_ceiling(const CVector& x, double ceiling);

}  // namespace qdyn
