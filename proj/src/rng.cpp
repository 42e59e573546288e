#include "qdyn/rng.hpp"

#include <cmath>

#include "qdyn/common.hpp"

namespace qdyn {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53 random bits mapped to the open interval (0, 1).
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

inline void box_muller(double u1, double u2, double& z0, double& z1) {
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * kPi * u2;
  z0 = r * std::cos(phi);
  z1 = r * std::sin(phi);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return c;
}

std::array<std::uint32_t, 4> NoiseStream::block(std::uint32_t step, NoiseTag tag,
                                                std::uint32_t index) const {
  return philox4x32({trajectory_, step, static_cast<std::uint32_t>(tag), index},
                    {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
}

void NoiseStream::normals(std::uint32_t step, NoiseTag tag, std::span<double> out) const {
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const auto b = block(step, tag, static_cast<std::uint32_t>(i / 2));
    double z0, z1;
    box_muller(to_unit(b[0], b[1]), to_unit(b[2], b[3]), z0, z1);
    out[i] = z0;
    if (i + 1 < out.size()) out[i + 1] = z1;
  }
}

void NoiseStream::uniforms(std::uint32_t step, NoiseTag tag, std::span<double> out) const {
  for (std::size_t i = 0; i < out.size(); i += 2) {
    const auto b = block(step, tag, static_cast<std::uint32_t>(i / 2));
    out[i] = to_unit(b[0], b[1]);
    if (i + 1 < out.size()) out[i + 1] = to_unit(b[2], b[3]);
  }
}

double NoiseSequence::uniform() {
  if (buffered_ == 0) {
    const auto b = stream_.block(step_, tag_, next_++);
    buffer_[0] = to_unit(b[0], b[1]);
    buffer_[1] = to_unit(b[2], b[3]);
    buffered_ = 2;
  }
  return buffer_[2 - buffered_--];
}

double NoiseSequence::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  double z0, z1;
  box_muller(u1, u2, z0, z1);
  return z0;
}

double NoiseSequence::gamma(double shape) {
  require(shape > 0.0, "gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost to shape+1 and rescale by U^(1/shape).
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

void gaussian_field_noise(const NoiseStream& stream, std::uint32_t step, NoiseTag tag,
                          double cell_volume, double dt, std::span<double> out) {
  require(dt > 0.0, "gaussian_field_noise: dt must be positive");
  require(cell_volume > 0.0, "gaussian_field_noise: cell volume must be positive");
  stream.normals(step, tag, out);
  const double scale = 1.0 / std::sqrt(cell_volume * dt);
  for (auto& v : out) v *= scale;
}

}  // namespace qdyn
