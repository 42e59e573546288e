#pragma once

#include <array>
#include <cstdint>

#include "qdyn/common.hpp"

namespace qdyn {

/// Exact fixed-point accumulator covering the full double range. Sums are exact,
/// so addition and merging are associative and order independent; the double
/// reported by value() is a deterministic function of the exact sum.
class ExactSum {
 public:
  void add(double x);
  void merge(const ExactSum& other);
  double value() const;
  bool operator==(const ExactSum& other) const;

 private:
  // 32-bit limbs held in int64 so carries can be deferred; bit 0 of limb 0 is 2^-1074.
  static constexpr int kLimbs = 72;
  void normalize();

  std::array<std::int64_t, kLimbs> limbs_{};
  std::uint32_t pending_ = 0;  // additions since the last normalize
  bool non_finite_ = false;
  double non_finite_value_ = 0.0;
};

/// Running moments of one complex observable with optional real weights.
///
/// The reported error bar is the CLT estimate sqrt(sum w^2 (x - mean)^2 * n/(n-1)) / sum w,
/// which reduces to sample-standard-deviation / sqrt(n) for unit weights.
class MomentAccumulator {
 public:
  void add(cplx value, double weight = 1.0);
  void merge(const MomentAccumulator& other);

  std::uint64_t count() const { return count_; }
  double weight_sum() const { return w_.value(); }
  cplx mean() const;
  /// CLT error bars of the real and imaginary parts packed as a complex number.
  cplx error() const;

  bool operator==(const MomentAccumulator& other) const;

 private:
  ExactSum w_, w2_;
  ExactSum wx_re_, wx_im_;      // sum w x
  ExactSum w2x_re_, w2x_im_;    // sum w^2 x
  ExactSum w2xx_re_, w2xx_im_;  // sum w^2 x^2 (per component)
  std::uint64_t count_ = 0;
};

}  // namespace qdyn
