#include "qdyn/moments.hpp"

#include <cmath>

namespace qdyn {

namespace {

using Powers = std::array<std::uint8_t, Monomial::kMaxModes>;

std::uint64_t pack_powers(const Powers& p) {
  std::uint64_t key = 0;
  for (int i = Monomial::kMaxModes - 1; i >= 0; --i) key = (key << 4) | p[i];
  return key;
}

Powers unpack_powers(std::uint64_t key) {
  Powers p{};
  for (int i = 0; i < Monomial::kMaxModes; ++i) {
    p[i] = static_cast<std::uint8_t>(key & 0xF);
    key >>= 4;
  }
  return p;
}

double falling_ratio(int n, int k) {  // n! / (n-k)!
  double r = 1.0;
  for (int j = 0; j < k; ++j) r *= n - j;
  return r;
}

// Expands prod_i (sum_j coeff(i, j) x_j)^{power_i} into a map of power vectors.
template <class Coeff>
std::unordered_map<std::uint64_t, cplx> expand_linear_forms(const Powers& power, int modes,
                                                            Coeff coeff) {
  std::unordered_map<std::uint64_t, cplx> current{{0, 1.0}};
  for (int i = 0; i < modes; ++i) {
    for (int rep = 0; rep < power[i]; ++rep) {
      std::unordered_map<std::uint64_t, cplx> next;
      for (const auto& [key, c] : current) {
        const Powers p = unpack_powers(key);
        for (int j = 0; j < modes; ++j) {
          const cplx w = coeff(i, j);
          if (w == 0.0) continue;
          Powers q = p;
          ++q[j];
          next[pack_powers(q)] += c * w;
        }
      }
      current = std::move(next);
    }
  }
  return current;
}

}  // namespace

Monomial Monomial::a(int mode, int power) {
  require(mode >= 0 && mode < kMaxModes && power >= 0 && power < 16, "Monomial: bad mode/power");
  Monomial m;
  m.annihilate[mode] = static_cast<std::uint8_t>(power);
  return m;
}

Monomial Monomial::adag(int mode, int power) {
  require(mode >= 0 && mode < kMaxModes && power >= 0 && power < 16, "Monomial: bad mode/power");
  Monomial m;
  m.create[mode] = static_cast<std::uint8_t>(power);
  return m;
}

int Monomial::degree() const {
  int d = 0;
  for (int i = 0; i < kMaxModes; ++i) d += create[i] + annihilate[i];
  return d;
}

std::uint64_t Monomial::key() const {
  std::uint64_t key = 0;
  for (int i = kMaxModes - 1; i >= 0; --i) key = (key << 8) | (create[i] << 4) | annihilate[i];
  return key;
}

Monomial Monomial::from_key(std::uint64_t key) {
  Monomial m;
  for (int i = 0; i < kMaxModes; ++i) {
    m.annihilate[i] = static_cast<std::uint8_t>(key & 0xF);
    m.create[i] = static_cast<std::uint8_t>((key >> 4) & 0xF);
    key >>= 8;
  }
  return m;
}

Monomial Monomial::adjoint() const {
  Monomial m;
  m.create = annihilate;
  m.annihilate = create;
  return m;
}

NormalPolynomial::NormalPolynomial(cplx constant) {
  if (constant != 0.0) terms_[0] = constant;
}

NormalPolynomial::NormalPolynomial(const Monomial& m, cplx coefficient) {
  if (coefficient != 0.0) terms_[m.key()] = coefficient;
}

void NormalPolynomial::add_term(std::uint64_t key, cplx c) {
  auto [it, inserted] = terms_.emplace(key, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

NormalPolynomial& NormalPolynomial::operator+=(const NormalPolynomial& other) {
  for (const auto& [k, c] : other.terms_) add_term(k, c);
  return *this;
}

NormalPolynomial& NormalPolynomial::operator-=(const NormalPolynomial& other) {
  for (const auto& [k, c] : other.terms_) add_term(k, -c);
  return *this;
}

NormalPolynomial& NormalPolynomial::operator*=(cplx s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [k, c] : terms_) c *= s;
  return *this;
}

NormalPolynomial operator*(const NormalPolynomial& a, const NormalPolynomial& b) {
  NormalPolynomial out;
  for (const auto& [ka, ca] : a.terms_) {
    const Monomial ma = Monomial::from_key(ka);
    for (const auto& [kb, cb] : b.terms_) {
      const Monomial mb = Monomial::from_key(kb);
      // a^q a^dag^p = sum_k k! C(q,k) C(p,k) a^dag^{p-k} a^{q-k}, independently per mode
      auto rec = [&](auto&& self, int mode, Monomial acc, double weight) -> void {
        if (mode == Monomial::kMaxModes) {
          out.add_term(acc.key(), ca * cb * weight);
          return;
        }
        const int q = ma.annihilate[mode];
        const int p = mb.create[mode];
        double w = 1.0;  // k! C(q,k) C(p,k) built incrementally
        for (int k = 0; k <= std::min(q, p); ++k) {
          if (k > 0) w *= static_cast<double>(q - k + 1) * (p - k + 1) / k;
          Monomial next = acc;
          next.create[mode] = static_cast<std::uint8_t>(ma.create[mode] + p - k);
          next.annihilate[mode] = static_cast<std::uint8_t>(q + mb.annihilate[mode] - k);
          require(next.create[mode] < 16 && next.annihilate[mode] < 16,
                  "NormalPolynomial: power overflow");
          self(self, mode + 1, next, weight * w);
        }
      };
      rec(rec, 0, Monomial{}, 1.0);
    }
  }
  return out;
}

NormalPolynomial NormalPolynomial::adjoint() const {
  NormalPolynomial out;
  for (const auto& [k, c] : terms_) out.add_term(Monomial::from_key(k).adjoint().key(), std::conj(c));
  return out;
}

cplx MomentSource::expect(const NormalPolynomial& p) const {
  cplx sum = 0.0;
  for (const auto& [k, c] : p.terms()) sum += c * moment(Monomial::from_key(k));
  return sum;
}

FockMoments::FockMoments(StateVector state) : state_(std::move(state)) {
  require(state_.basis != nullptr, "FockMoments: missing basis");
  require(state_.basis->mode_count() <= Monomial::kMaxModes, "FockMoments: too many modes");
  norm2_ = state_.amplitudes.squaredNorm();
  require(norm2_ > 0.0, "FockMoments: zero state");
}

cplx FockMoments::moment(const Monomial& m) const {
  const auto key = m.key();
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const auto& basis = *state_.basis;
  const int modes = basis.mode_count();
  for (int i = modes; i < Monomial::kMaxModes; ++i)
    require(m.create[i] == 0 && m.annihilate[i] == 0, "FockMoments: monomial uses unknown mode");
  std::array<int, FockBasis::kMaxModes> target{};
  cplx sum = 0.0;
  for (std::size_t s = 0; s < basis.size(); ++s) {
    const cplx psi = state_.amplitudes[static_cast<Eigen::Index>(s)];
    if (psi == 0.0) continue;
    const auto occ = basis.occupation(s);
    double factor = 1.0;
    bool valid = true;
    for (int i = 0; i < modes; ++i) {
      const int n = occ[i];
      if (n < m.annihilate[i]) {
        valid = false;
        break;
      }
      const int lowered = n - m.annihilate[i];
      target[i] = lowered + m.create[i];
      factor *= falling_ratio(n, m.annihilate[i]) * falling_ratio(target[i], m.create[i]);
    }
    if (!valid) continue;
    const auto t = basis.index_of(std::span<const int>(target.data(), modes));
    if (t < 0) continue;
    sum += std::conj(state_.amplitudes[t]) * psi * std::sqrt(factor);
  }
  sum /= norm2_;
  cache_.emplace(key, sum);
  return sum;
}

ProductMoments::ProductMoments(std::vector<std::shared_ptr<const MomentSource>> parts)
    : parts_(std::move(parts)) {
  for (const auto& p : parts_) {
    require(p != nullptr, "ProductMoments: missing part");
    modes_ += p->mode_count();
  }
  require(modes_ <= Monomial::kMaxModes, "ProductMoments: too many modes");
}

cplx ProductMoments::moment(const Monomial& m) const {
  cplx value = 1.0;
  int offset = 0;
  for (const auto& part : parts_) {
    Monomial sub;
    for (int i = 0; i < part->mode_count(); ++i) {
      sub.create[i] = m.create[offset + i];
      sub.annihilate[i] = m.annihilate[offset + i];
    }
    value *= part->moment(sub);
    offset += part->mode_count();
  }
  return value;
}

LinearTransformMoments::LinearTransformMoments(std::shared_ptr<const MomentSource> source,
                                               CMatrix transform)
    : source_(std::move(source)), u_(std::move(transform)) {
  require(source_ != nullptr, "LinearTransformMoments: missing source");
  require(u_.rows() == source_->mode_count() && u_.cols() == source_->mode_count(),
          "LinearTransformMoments: transform must be square over the source modes");
}

cplx LinearTransformMoments::moment(const Monomial& m) const {
  const auto key = m.key();
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const int modes = mode_count();
  const auto create =
      expand_linear_forms(m.create, modes, [&](int i, int j) { return std::conj(u_(i, j)); });
  const auto annihilate = expand_linear_forms(m.annihilate, modes, [&](int i, int j) { return u_(i, j); });
  cplx sum = 0.0;
  for (const auto& [kc, cc] : create)
    for (const auto& [ka, ca] : annihilate) {
      Monomial src;
      src.create = unpack_powers(kc);
      src.annihilate = unpack_powers(ka);
      sum += cc * ca * source_->moment(src);
    }
  cache_.emplace(key, sum);
  return sum;
}

}  // namespace qdyn
