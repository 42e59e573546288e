#include "qdyn/accumulator.hpp"

#include <cmath>
#include <limits>

namespace qdyn {

namespace {

constexpr int kBias = 1074;  // exponent of the least significant representable bit

}  // namespace

void ExactSum::add(double x) {
  if (x == 0.0) return;
  if (!std::isfinite(x)) {
    non_finite_value_ = non_finite_ ? non_finite_value_ + x : x;
    non_finite_ = true;
    return;
  }
  int exp = 0;
  const double frac = std::frexp(std::fabs(x), &exp);  // |x| = frac * 2^exp, frac in [0.5, 1)
  // 53-bit integer mantissa with weight 2^(exp-53).
  auto mant = static_cast<std::uint64_t>(std::ldexp(frac, 53));
  int shift = exp - 53 + kBias;
  if (shift < 0) {  // subnormal input: the low bits are zero, drop them exactly
    mant >>= -shift;
    shift = 0;
  }
  const int limb = shift / 32;
  const int offset = shift % 32;
  const unsigned __int128 wide = static_cast<unsigned __int128>(mant) << offset;
  const std::int64_t sign = x < 0 ? -1 : 1;
  for (int i = 0; i < 3 && limb + i < kLimbs; ++i) {
    const auto part = static_cast<std::uint32_t>(wide >> (32 * i));
    limbs_[limb + i] += sign * static_cast<std::int64_t>(part);
  }
  if (++pending_ >= (1u << 30)) normalize();
}

void ExactSum::normalize() {
  std::int64_t carry = 0;
  for (int i = 0; i < kLimbs; ++i) {
    std::int64_t v = limbs_[i] + carry;
    if (i == kLimbs - 1) {
      limbs_[i] = v;
      break;
    }
    // floor division by 2^32 keeps every lower limb in [0, 2^32)
    carry = v >> 32;
    limbs_[i] = v - (carry << 32);
  }
  pending_ = 0;
}

void ExactSum::merge(const ExactSum& other) {
  ExactSum rhs = other;
  rhs.normalize();
  normalize();
  for (int i = 0; i < kLimbs; ++i) limbs_[i] += rhs.limbs_[i];
  normalize();
  if (other.non_finite_) {
    non_finite_value_ = non_finite_ ? non_finite_value_ + other.non_finite_value_
                                    : other.non_finite_value_;
    non_finite_ = true;
  }
}

double ExactSum::value() const {
  if (non_finite_) return non_finite_value_;
  ExactSum copy = *this;
  copy.normalize();
  auto& l = copy.limbs_;
  double sign = 1.0;
  if (l[kLimbs - 1] < 0) {
    // two's complement negate so every limb is a non-negative magnitude digit
    sign = -1.0;
    for (auto& v : l) v = -v;
    copy.normalize();
  }
  int top = kLimbs - 1;
  while (top >= 0 && l[top] == 0) --top;
  if (top < 0) return 0.0;
  double result = 0.0;
  for (int i = std::max(0, top - 3); i <= top; ++i) {
    result += std::ldexp(static_cast<double>(l[i]), 32 * i - kBias);
  }
  return sign * result;
}

bool ExactSum::operator==(const ExactSum& other) const {
  ExactSum a = *this, b = other;
  a.normalize();
  b.normalize();
  return a.limbs_ == b.limbs_ && a.non_finite_ == b.non_finite_;
}

void MomentAccumulator::add(cplx value, double weight) {
  const double w2 = weight * weight;
  w_.add(weight);
  w2_.add(w2);
  wx_re_.add(weight * value.real());
  wx_im_.add(weight * value.imag());
  w2x_re_.add(w2 * value.real());
  w2x_im_.add(w2 * value.imag());
  w2xx_re_.add(w2 * value.real() * value.real());
  w2xx_im_.add(w2 * value.imag() * value.imag());
  ++count_;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  w_.merge(other.w_);
  w2_.merge(other.w2_);
  wx_re_.merge(other.wx_re_);
  wx_im_.merge(other.wx_im_);
  w2x_re_.merge(other.w2x_re_);
  w2x_im_.merge(other.w2x_im_);
  w2xx_re_.merge(other.w2xx_re_);
  w2xx_im_.merge(other.w2xx_im_);
  count_ += other.count_;
}

cplx MomentAccumulator::mean() const {
  const double w = w_.value();
  if (count_ == 0 || w == 0.0) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  return {wx_re_.value() / w, wx_im_.value() / w};
}

cplx MomentAccumulator::error() const {
  if (count_ < 2) return {0.0, 0.0};
  const double w = w_.value();
  const double w2 = w2_.value();
  const cplx mu = mean();
  const double n = static_cast<double>(count_);
  auto component = [&](double mu_c, double s3, double s2) {
    const double ss = std::max(0.0, s2 - 2.0 * mu_c * s3 + mu_c * mu_c * w2);
    return std::sqrt(ss * n / (n - 1.0)) / std::fabs(w);
  };
  return {component(mu.real(), w2x_re_.value(), w2xx_re_.value()),
          component(mu.imag(), w2x_im_.value(), w2xx_im_.value())};
}

bool MomentAccumulator::operator==(const MomentAccumulator& other) const {
  return count_ == other.count_ && w_ == other.w_ && w2_ == other.w2_ &&
         wx_re_ == other.wx_re_ && wx_im_ == other.wx_im_ && w2x_re_ == other.w2x_re_ &&
         w2x_im_ == other.w2x_im_ && w2xx_re_ == other.w2xx_re_ && w2xx_im_ == other.w2xx_im_;
}

}  // namespace qdyn
