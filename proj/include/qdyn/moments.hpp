#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "qdyn/common.hpp"
#include "qdyn/fock.hpp"

namespace qdyn {

/// Normally ordered monomial prod_i a_i^dag^{create_i} prod_i a_i^{annihilate_i}.
struct Monomial {
  static constexpr int kMaxModes = 8;
  std::array<std::uint8_t, kMaxModes> create{};
  std::array<std::uint8_t, kMaxModes> annihilate{};

  static Monomial identity() { return {}; }
  static Monomial a(int mode, int power = 1);
  static Monomial adag(int mode, int power = 1);

  int degree() const;
  std::uint64_t key() const;
  static Monomial from_key(std::uint64_t key);
  Monomial adjoint() const;
  bool operator==(const Monomial&) const = default;
};

/// Polynomial in ladder operators kept in normal order.
class NormalPolynomial {
 public:
  NormalPolynomial() = default;
  NormalPolynomial(cplx constant);  // NOLINT: implicit scalar promotion is intended
  NormalPolynomial(const Monomial& m, cplx coefficient = 1.0);

  static NormalPolynomial a(int mode) { return {Monomial::a(mode)}; }
  static NormalPolynomial adag(int mode) { return {Monomial::adag(mode)}; }

  NormalPolynomial& operator+=(const NormalPolynomial& other);
  NormalPolynomial& operator-=(const NormalPolynomial& other);
  NormalPolynomial& operator*=(cplx s);
  friend NormalPolynomial operator+(NormalPolynomial a, const NormalPolynomial& b) { return a += b; }
  friend NormalPolynomial operator-(NormalPolynomial a, const NormalPolynomial& b) { return a -= b; }
  friend NormalPolynomial operator*(NormalPolynomial a, cplx s) { return a *= s; }
  friend NormalPolynomial operator*(cplx s, NormalPolynomial a) { return a *= s; }
  /// Operator product, re-normal-ordered with [a_i, a_j^dag] = delta_ij.
  friend NormalPolynomial operator*(const NormalPolynomial& a, const NormalPolynomial& b);

  NormalPolynomial adjoint() const;
  const std::unordered_map<std::uint64_t, cplx>& terms() const { return terms_; }

 private:
  void add_term(std::uint64_t key, cplx c);
  std::unordered_map<std::uint64_t, cplx> terms_;
};

/// Source of normally ordered expectation values. Implementations cache results
/// and are not safe for concurrent use.
class MomentSource {
 public:
  virtual ~MomentSource() = default;
  virtual int mode_count() const = 0;
  virtual cplx moment(const Monomial& m) const = 0;
  cplx expect(const NormalPolynomial& p) const;
};

/// Moments of a Fock-basis state vector.
class FockMoments : public MomentSource {
 public:
  explicit FockMoments(StateVector state);
  int mode_count() const override { return state_.basis->mode_count(); }
  cplx moment(const Monomial& m) const override;
  const StateVector& state() const { return state_; }

 private:
  StateVector state_;
  double norm2_;
  mutable std::unordered_map<std::uint64_t, cplx> cache_;
};

/// Moments of a product state: modes of the parts are concatenated in order.
class ProductMoments : public MomentSource {
 public:
  explicit ProductMoments(std::vector<std::shared_ptr<const MomentSource>> parts);
  int mode_count() const override { return modes_; }
  cplx moment(const Monomial& m) const override;

 private:
  std::vector<std::shared_ptr<const MomentSource>> parts_;
  int modes_ = 0;
};

/// Moments after a passive linear transformation c_i = sum_j U_ij d_j of the source modes.
class LinearTransformMoments : public MomentSource {
 public:
  LinearTransformMoments(std::shared_ptr<const MomentSource> source, CMatrix transform);
  int mode_count() const override { return static_cast<int>(u_.rows()); }
  cplx moment(const Monomial& m) const override;

 private:
  std::shared_ptr<const MomentSource> source_;
  CMatrix u_;
  mutable std::unordered_map<std::uint64_t, cplx> cache_;
};

}  // namespace qdyn
