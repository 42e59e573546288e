#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Sparse>

#include "qdyn/common.hpp"

namespace qdyn {

enum class Truncation {
  per_mode,       // 0 <= n_i <= cutoff_i
  total_at_most,  // sum n_i <= N
  number_sector,  // sum n_i == N
};

/// Occupation-number basis for a few bosonic modes.
class FockBasis {
 public:
  static constexpr int kMaxModes = 6;
  static constexpr std::size_t kDefaultCapacity = 5'000'000;

  static FockBasis per_mode(int modes, int cutoff, std::size_t capacity = kDefaultCapacity);
  static FockBasis per_mode(std::vector<int> cutoffs, std::size_t capacity = kDefaultCapacity);
  static FockBasis total_at_most(int modes, int total, std::size_t capacity = kDefaultCapacity);
  static FockBasis number_sector(int modes, int total, std::size_t capacity = kDefaultCapacity);

  int mode_count() const { return modes_; }
  std::size_t size() const { return size_; }
  Truncation truncation() const { return truncation_; }
  int cutoff(int mode) const { return cutoffs_.at(mode); }
  int total() const { return total_; }
  /// True when hopping moves a_i^dag a_j never leave the basis.
  bool closed_under_hopping() const { return truncation_ != Truncation::per_mode; }

  std::span<const std::uint16_t> occupation(std::size_t index) const {
    return {occ_.data() + index * modes_, static_cast<std::size_t>(modes_)};
  }
  /// Linear index of an occupation vector, or -1 when it lies outside the basis.
  std::int64_t index_of(std::span<const int> occupation) const;

 private:
  FockBasis() = default;
  void finish();

  int modes_ = 0;
  Truncation truncation_ = Truncation::per_mode;
  std::vector<int> cutoffs_;
  int total_ = 0;
  std::size_t size_ = 0;
  std::vector<std::uint16_t> occ_;
  std::vector<std::size_t> stride_;                   // per_mode mixed radix
  std::unordered_map<std::uint64_t, std::int64_t> map_;  // other truncations
};

struct StateVector {
  std::shared_ptr<const FockBasis> basis;
  CVector amplitudes;
  /// Probability discarded by basis truncation when the state was prepared.
  double truncation_loss = 0.0;

  double norm() const { return amplitudes.norm(); }
};

/// Smallest n_max whose Poisson(mean) tail beyond n_max is below `tolerance`.
int poisson_cutoff(double mean, double tolerance = 1e-10);

/// Product coherent state, normalized over the truncated basis. The weight lying
/// outside the basis is reported in `truncation_loss`.
StateVector coherent_state(std::span<const cplx> alpha, std::shared_ptr<const FockBasis> basis);

/// Expectation of a_i^dag a_i for every mode.
RVector mode_occupations(const StateVector& state);

using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

struct FewModeHamiltonian {
  std::shared_ptr<const FockBasis> basis;
  SparseMatrix matrix;
  bool diagonal = false;
};

/// H = sum_ij omega_ij a_i^dag a_j + 1/2 sum_ij chi_ij a_i^dag a_j^dag a_j a_i.
/// Hopping out of a per-mode truncated basis is dropped.
FewModeHamiltonian few_mode_hamiltonian(const CMatrix& omega, const RMatrix& chi,
                                        std::shared_ptr<const FockBasis> basis);

/// Two wells, two spins, modes ordered (a1, a2, b1, b2): tunneling omega between a_i
/// and b_i and the same intra-well interaction chi (2x2) in both wells.
FewModeHamiltonian double_well_hamiltonian(double omega, const RMatrix& chi,
                                           std::shared_ptr<const FockBasis> basis);

/// exp(-i H t) on states of one basis. Diagonal Hamiltonians are exponentiated
/// directly, small ones by dense diagonalization, large ones by Lanczos steps.
class Propagator {
 public:
  static constexpr std::size_t kDenseLimit = 2500;

  explicit Propagator(FewModeHamiltonian hamiltonian, double tolerance = 1e-12);

  StateVector apply(const StateVector& state, double t) const;

 private:
  CVector krylov(const CVector& v, double t) const;

  FewModeHamiltonian h_;
  double tolerance_;
  enum class Method { diagonal, dense, krylov } method_;
  RVector eigenvalues_;
  CMatrix eigenvectors_;
};

StateVector evolve(const StateVector& state, const FewModeHamiltonian& hamiltonian, double t);

/// Heisenberg rotation a -> cos(angle) a + e^{i phase} sin(angle) b,
/// b -> -e^{-i phase} sin(angle) a + cos(angle) b, applied to the state.
StateVector mode_rotation(const StateVector& state, int mode_a, int mode_b, double angle,
                          double phase);

/// Beam splitter between the wells for one spin of the (a1, a2, b1, b2) layout.
StateVector beam_splitter(const StateVector& state, double mixing_angle, int spin_index,
                          double phase = 0.0);

}  // namespace qdyn
