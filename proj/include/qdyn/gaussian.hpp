#pragma once

#include <span>
#include <string>
#include <vector>

#include "qdyn/common.hpp"
#include "qdyn/lattice.hpp"

namespace qdyn {

// Number-conserving Gaussian operators Lambda = :exp(-da^dag mu da): / N, parameterized by the
// stochastic Green's function n, whose ensemble average is <a_i^dag a_j>.

struct GaussianPoint {
  Statistics species = Statistics::boson;
  CMatrix n;
  double weight = 1.0;
  // optional bosonic displacement (alpha, beta); empty means none
  CVector alpha;
  CVector beta;

  int modes() const { return static_cast<int>(n.rows()); }
};

/// Determinant as log-magnitude and phase, from a partially pivoted LU factorization.
struct LogDet {
  double log_abs = 0.0;
  double phase = 0.0;
  cplx value() const { return std::polar(std::exp(log_abs), phase); }
};

LogDet log_determinant(const CMatrix& m);

/// Inverses are refused above this condition number.
inline constexpr double kMaxCondition = 1e12;

/// boson: mu = (I + n)^{-T};  fermion: mu = 2I - (I - n)^{-T}.
CMatrix mu_from_n(Statistics species, const CMatrix& n);
/// boson: n = mu^{-T} - I;    fermion: n = I - (2I - mu)^{-T}.
CMatrix n_from_mu(Statistics species, const CMatrix& mu);

/// Trace of the unnormalized operator: det(mu)^{-1} for bosons, det(2I - mu) for fermions.
cplx normalization(Statistics species, const CMatrix& mu);

/// Tr[Lambda(a) Lambda(b)] of normalized operators:
/// bosons det(I + n + m)^{-1}, fermions det((I - n)(I - m) + n m).
LogDet log_inner_product(const GaussianPoint& a, const GaussianPoint& b);
cplx inner_product(const GaussianPoint& a, const GaussianPoint& b);

/// Throws unless Hermitian n has eigenvalues in [0, 1] (fermions) or >= 0 (bosons).
void check_physical(const GaussianPoint& point, double tolerance = 1e-10);

enum class Pairing {
  disjoint,   // samples (0,1), (2,3), ...: independent pair values
  all_pairs,  // U-statistic over every unordered pair i < j
  exact,      // every ordered pair including i = j: the ensemble is the distribution itself
};

Pairing parse_pairing(const std::string& name);
std::string to_string(Pairing pairing);

struct EntropyEstimate {
  double s2 = 0.0;
  double error = 0.0;
  cplx purity = 0.0;  // estimate of Tr rho^2
  double purity_error = 0.0;
  std::size_t pair_count = 0;
  bool defined = true;
  bool sign_problem = false;  // purity estimate not positive
};

/// S2 = -ln Tr rho^2 estimated as a double phase-space average of inner products.
EntropyEstimate renyi_entropy(std::span<const GaussianPoint> ensemble, Pairing pairing = Pairing::disjoint);

}  // namespace qdyn
