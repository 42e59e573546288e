#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace qdyn {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Purpose tags that partition the counter space of a trajectory.
enum class NoiseTag : std::uint32_t {
  initial = 1,
  dynamics = 2,
  losses = 3,
  dynamics_beta = 4,
  user = 16,
};

/// Reproducible noise for one trajectory. Every draw is a pure function of
/// (seed, trajectory, step, tag, index), so results do not depend on worker
/// assignment or evaluation order.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint32_t trajectory) : seed_(seed), trajectory_(trajectory) {}

  std::uint64_t seed() const { return seed_; }
  std::uint32_t trajectory() const { return trajectory_; }

  /// Standard normal deviates for slots 0..out.size()-1.
  void normals(std::uint32_t step, NoiseTag tag, std::span<double> out) const;
  /// Uniform deviates in (0, 1).
  void uniforms(std::uint32_t step, NoiseTag tag, std::span<double> out) const;

  /// Raw 128-bit block for counter (trajectory, step, tag, index).
  std::array<std::uint32_t, 4> block(std::uint32_t step, NoiseTag tag, std::uint32_t index) const;

 private:
  std::uint64_t seed_;
  std::uint32_t trajectory_;
};

/// Sequential draws from one (trajectory, step, tag) cell of the counter space, for
/// samplers that consume a variable number of deviates (rejection sampling).
class NoiseSequence {
 public:
  NoiseSequence(const NoiseStream& stream, std::uint32_t step, NoiseTag tag)
      : stream_(stream), step_(step), tag_(tag) {}

  double uniform();
  double normal();
  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape);

 private:
  NoiseStream stream_;
  std::uint32_t step_;
  NoiseTag tag_;
  std::uint32_t next_ = 0;
  double buffer_[2] = {0.0, 0.0};
  int buffered_ = 0;
};

/// White-noise field samples xi_m with <xi xi> = 1/(cell_volume dt) per mode per step.
void gaussian_field_noise(const NoiseStream& stream, std::uint32_t step, NoiseTag tag,
                          double cell_volume, double dt, std::span<double> out);

}  // namespace qdyn
