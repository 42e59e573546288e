#include "qdyn/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qdyn {

namespace {

constexpr int kPackBits = 10;
constexpr int kMaxOccupation = (1 << kPackBits) - 1;

std::uint64_t pack(std::span<const int> occ) {
  std::uint64_t key = 0;
  for (int n : occ) key = (key << kPackBits) | static_cast<std::uint64_t>(n);
  return key;
}

double binomial(double n, double k) {
  if (k < 0 || k > n) return 0.0;
  return std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1));
}

void check_capacity(double states, std::size_t capacity) {
  if (states > static_cast<double>(capacity))
    throw CapacityError("Fock basis would hold " + std::to_string(static_cast<long long>(states)) +
                        " states, above the capacity guard of " + std::to_string(capacity));
}

void check_modes(int modes) {
  require(modes >= 1 && modes <= FockBasis::kMaxModes,
          "Fock basis supports 1 to " + std::to_string(FockBasis::kMaxModes) + " modes");
}

}  // namespace

FockBasis FockBasis::per_mode(int modes, int cutoff, std::size_t capacity) {
  check_modes(modes);
  return per_mode(std::vector<int>(modes, cutoff), capacity);
}

FockBasis FockBasis::per_mode(std::vector<int> cutoffs, std::size_t capacity) {
  check_modes(static_cast<int>(cutoffs.size()));
  double states = 1.0;
  for (int c : cutoffs) {
    require(c >= 0 && c <= kMaxOccupation, "per-mode cutoff out of range");
    states *= c + 1.0;
  }
  check_capacity(states, capacity);
  FockBasis b;
  b.modes_ = static_cast<int>(cutoffs.size());
  b.truncation_ = Truncation::per_mode;
  b.cutoffs_ = std::move(cutoffs);
  b.total_ = std::accumulate(b.cutoffs_.begin(), b.cutoffs_.end(), 0);
  b.size_ = static_cast<std::size_t>(states);
  b.stride_.assign(b.modes_, 1);
  for (int m = b.modes_ - 2; m >= 0; --m) b.stride_[m] = b.stride_[m + 1] * (b.cutoffs_[m + 1] + 1);
  b.occ_.resize(b.size_ * b.modes_);
  for (std::size_t i = 0; i < b.size_; ++i) {
    std::size_t rest = i;
    for (int m = 0; m < b.modes_; ++m) {
      b.occ_[i * b.modes_ + m] = static_cast<std::uint16_t>(rest / b.stride_[m]);
      rest %= b.stride_[m];
    }
  }
  return b;
}

FockBasis FockBasis::total_at_most(int modes, int total, std::size_t capacity) {
  check_modes(modes);
  require(total >= 0 && total <= kMaxOccupation, "total particle cutoff out of range");
  check_capacity(binomial(total + modes, modes), capacity);
  FockBasis b;
  b.modes_ = modes;
  b.truncation_ = Truncation::total_at_most;
  b.cutoffs_.assign(modes, total);
  b.total_ = total;
  // enumerate in lexicographic order
  std::vector<int> occ(modes, 0);
  for (;;) {
    for (int n : occ) b.occ_.push_back(static_cast<std::uint16_t>(n));
    int m = modes - 1;
    int sum = std::accumulate(occ.begin(), occ.end(), 0);
    while (m >= 0) {
      if (sum < total) {
        ++occ[m];
        break;
      }
      sum -= occ[m];
      occ[m] = 0;
      --m;
    }
    if (m < 0) break;
  }
  b.finish();
  return b;
}

FockBasis FockBasis::number_sector(int modes, int total, std::size_t capacity) {
  check_modes(modes);
  require(total >= 0 && total <= kMaxOccupation, "particle number out of range");
  check_capacity(binomial(total + modes - 1, modes - 1), capacity);
  FockBasis b;
  b.modes_ = modes;
  b.truncation_ = Truncation::number_sector;
  b.cutoffs_.assign(modes, total);
  b.total_ = total;
  std::vector<int> occ(modes, 0);
  // recursive enumeration of compositions of `total`
  auto rec = [&](auto&& self, int mode, int remaining) -> void {
    if (mode == modes - 1) {
      occ[mode] = remaining;
      for (int n : occ) b.occ_.push_back(static_cast<std::uint16_t>(n));
      return;
    }
    for (int n = remaining; n >= 0; --n) {
      occ[mode] = n;
      self(self, mode + 1, remaining - n);
    }
  };
  rec(rec, 0, total);
  b.finish();
  return b;
}

void FockBasis::finish() {
  size_ = occ_.size() / modes_;
  map_.reserve(size_);
  std::vector<int> occ(modes_);
  for (std::size_t i = 0; i < size_; ++i) {
    for (int m = 0; m < modes_; ++m) occ[m] = occ_[i * modes_ + m];
    map_.emplace(pack(occ), static_cast<std::int64_t>(i));
  }
}

std::int64_t FockBasis::index_of(std::span<const int> occupation) const {
  if (static_cast<int>(occupation.size()) != modes_) return -1;
  if (truncation_ == Truncation::per_mode) {
    std::size_t idx = 0;
    for (int m = 0; m < modes_; ++m) {
      if (occupation[m] < 0 || occupation[m] > cutoffs_[m]) return -1;
      idx += stride_[m] * occupation[m];
    }
    return static_cast<std::int64_t>(idx);
  }
  for (int n : occupation)
    if (n < 0 || n > total_) return -1;
  const auto it = map_.find(pack(occupation));
  return it == map_.end() ? -1 : it->second;
}

int poisson_cutoff(double mean, double tolerance) {
  require(mean >= 0.0, "poisson_cutoff: mean must be non-negative");
  if (mean == 0.0) return 0;
  // tail beyond n is bounded by p(n+1) / (1 - mean/(n+2)) once n + 2 > mean
  for (int n = static_cast<int>(mean); n <= kMaxOccupation; ++n) {
    const double next = std::exp((n + 1) * std::log(mean) - mean - std::lgamma(n + 2.0));
    const double ratio = mean / (n + 2.0);
    if (ratio < 1.0 && next / (1.0 - ratio) < tolerance) return n;
  }
  throw CapacityError("poisson_cutoff: mean too large for the Fock occupation limit");
}

StateVector coherent_state(std::span<const cplx> alpha, std::shared_ptr<const FockBasis> basis) {
  require(basis != nullptr, "coherent_state: missing basis");
  require(static_cast<int>(alpha.size()) == basis->mode_count(),
          "coherent_state: one amplitude per mode required");
  StateVector s;
  s.basis = basis;
  s.amplitudes.resize(static_cast<Eigen::Index>(basis->size()));
  double weight = 0.0;
  for (std::size_t i = 0; i < basis->size(); ++i) {
    const auto occ = basis->occupation(i);
    double log_mag = 0.0, phase = 0.0;
    bool zero = false;
    for (int m = 0; m < basis->mode_count(); ++m) {
      const double r = std::abs(alpha[m]);
      const int n = occ[m];
      log_mag -= 0.5 * r * r;
      if (n == 0) continue;
      if (r == 0.0) {
        zero = true;
        break;
      }
      log_mag += n * std::log(r) - 0.5 * std::lgamma(n + 1.0);
      phase += n * std::arg(alpha[m]);
    }
    const cplx a = zero ? cplx(0.0) : std::polar(std::exp(log_mag), phase);
    s.amplitudes[static_cast<Eigen::Index>(i)] = a;
    weight += std::norm(a);
  }
  s.truncation_loss = std::max(0.0, 1.0 - weight);
  require(weight > 0.0, "coherent_state: basis holds none of the state's weight");
  s.amplitudes /= std::sqrt(weight);
  return s;
}

RVector mode_occupations(const StateVector& state) {
  const auto& b = *state.basis;
  RVector n = RVector::Zero(b.mode_count());
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double p = std::norm(state.amplitudes[static_cast<Eigen::Index>(i)]);
    if (p == 0.0) continue;
    const auto occ = b.occupation(i);
    for (int m = 0; m < b.mode_count(); ++m) n[m] += p * occ[m];
  }
  return n;
}

FewModeHamiltonian few_mode_hamiltonian(const CMatrix& omega, const RMatrix& chi,
                                        std::shared_ptr<const FockBasis> basis) {
  require(basis != nullptr, "few_mode_hamiltonian: missing basis");
  const int modes = basis->mode_count();
  require(omega.rows() == modes && omega.cols() == modes, "omega must be modes x modes");
  require(chi.rows() == modes && chi.cols() == modes, "chi must be modes x modes");
  require((omega - omega.adjoint()).norm() <= 1e-12 * (1.0 + omega.norm()),
          "omega must be Hermitian");
  require((chi - chi.transpose()).norm() <= 1e-12 * (1.0 + chi.norm()), "chi must be symmetric");

  const auto dim = static_cast<Eigen::Index>(basis->size());
  std::vector<Eigen::Triplet<cplx>> triplets;
  bool diagonal = true;
  for (int i = 0; i < modes; ++i)
    for (int j = 0; j < modes; ++j)
      if (i != j && omega(i, j) != 0.0) diagonal = false;
  triplets.reserve(static_cast<std::size_t>(dim) * (diagonal ? 1 : 1 + modes));

  std::vector<int> occ(modes), target(modes);
  for (Eigen::Index s = 0; s < dim; ++s) {
    const auto o = basis->occupation(static_cast<std::size_t>(s));
    for (int m = 0; m < modes; ++m) occ[m] = o[m];
    double e = 0.0;
    for (int i = 0; i < modes; ++i) {
      e += omega(i, i).real() * occ[i];
      for (int j = 0; j < modes; ++j) e += 0.5 * chi(i, j) * occ[i] * (occ[j] - (i == j ? 1 : 0));
    }
    triplets.emplace_back(s, s, e);
    if (diagonal) continue;
    // <target| a_i^dag a_j |occ>, target = occ + e_i - e_j
    for (int i = 0; i < modes; ++i)
      for (int j = 0; j < modes; ++j) {
        if (i == j || omega(i, j) == 0.0 || occ[j] == 0) continue;
        target = occ;
        ++target[i];
        --target[j];
        const auto t = basis->index_of(target);
        if (t < 0) continue;
        triplets.emplace_back(t, s, omega(i, j) * std::sqrt(double(occ[i] + 1) * occ[j]));
      }
  }
  FewModeHamiltonian h;
  h.basis = std::move(basis);
  h.matrix.resize(dim, dim);
  h.matrix.setFromTriplets(triplets.begin(), triplets.end());
  h.diagonal = diagonal;
  return h;
}

FewModeHamiltonian double_well_hamiltonian(double omega, const RMatrix& chi,
                                           std::shared_ptr<const FockBasis> basis) {
  require(basis != nullptr && basis->mode_count() == 4,
          "double_well_hamiltonian: basis must cover the four modes (a1, a2, b1, b2)");
  require(chi.rows() == 2 && chi.cols() == 2, "double_well_hamiltonian: chi must be 2 x 2");
  CMatrix w = CMatrix::Zero(4, 4);
  RMatrix c = RMatrix::Zero(4, 4);
  for (int i = 0; i < 2; ++i) {
    w(i, 2 + i) = omega;
    w(2 + i, i) = omega;
  }
  c.topLeftCorner(2, 2) = chi;
  c.bottomRightCorner(2, 2) = chi;
  return few_mode_hamiltonian(w, c, std::move(basis));
}

Propagator::Propagator(FewModeHamiltonian hamiltonian, double tolerance)
    : h_(std::move(hamiltonian)), tolerance_(tolerance) {
  const SparseMatrix adjoint = h_.matrix.adjoint();
  const double scale = 1.0 + h_.matrix.norm();
  require((h_.matrix - adjoint).norm() <= 1e-12 * scale, "evolve: Hamiltonian is not Hermitian");
  if (h_.diagonal) {
    method_ = Method::diagonal;
    eigenvalues_ = h_.matrix.diagonal().real();
  } else if (h_.basis->size() <= kDenseLimit) {
    method_ = Method::dense;
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(CMatrix(h_.matrix));
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
  } else {
    method_ = Method::krylov;
  }
}

StateVector Propagator::apply(const StateVector& state, double t) const {
  require(state.basis && (state.basis == h_.basis || state.basis->size() == h_.basis->size()),
          "evolve: state and Hamiltonian use different bases");
  StateVector out = state;
  if (t == 0.0) return out;
  switch (method_) {
    case Method::diagonal:
      for (Eigen::Index i = 0; i < out.amplitudes.size(); ++i)
        out.amplitudes[i] *= std::polar(1.0, -eigenvalues_[i] * t);
      break;
    case Method::dense: {
      CVector c = eigenvectors_.adjoint() * state.amplitudes;
      for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= std::polar(1.0, -eigenvalues_[i] * t);
      out.amplitudes = eigenvectors_ * c;
      break;
    }
    case Method::krylov:
      out.amplitudes = krylov(state.amplitudes, t);
      break;
  }
  return out;
}

CVector Propagator::krylov(const CVector& start, double t) const {
  const int max_dim = static_cast<int>(std::min<std::size_t>(40, h_.basis->size()));
  CVector v = start;
  double done = 0.0;
  const double sign = t < 0 ? -1.0 : 1.0;
  const double span = std::fabs(t);
  double h = span;
  while (done < span) {
    const double beta0 = v.norm();
    if (beta0 == 0.0) return v;
    CMatrix basis(v.size(), max_dim + 1);
    RVector alpha(max_dim), beta(max_dim);
    basis.col(0) = v / beta0;
    int m = 0;
    bool invariant = false;
    for (; m < max_dim; ++m) {
      CVector w = h_.matrix * basis.col(m);
      alpha[m] = basis.col(m).dot(w).real();
      w -= alpha[m] * basis.col(m);
      if (m > 0) w -= beta[m - 1] * basis.col(m - 1);
      // full reorthogonalization keeps the small subspace accurate
      for (int k = 0; k <= m; ++k) w -= basis.col(k).dot(w) * basis.col(k);
      beta[m] = w.norm();
      if (beta[m] < 1e-13 * (1.0 + std::fabs(alpha[m]))) {
        ++m;
        invariant = true;
        break;
      }
      basis.col(m + 1) = w / beta[m];
    }
    RMatrix tri = RMatrix::Zero(m, m);
    for (int k = 0; k < m; ++k) {
      tri(k, k) = alpha[k];
      if (k + 1 < m) tri(k, k + 1) = tri(k + 1, k) = beta[k];
    }
    Eigen::SelfAdjointEigenSolver<RMatrix> solver(tri);
    h = std::min(h * 2.0, span - done);
    CVector y;
    for (;;) {
      CVector c(m);
      for (int k = 0; k < m; ++k)
        c[k] = std::polar(1.0, -solver.eigenvalues()[k] * sign * h) * solver.eigenvectors()(0, k);
      y = solver.eigenvectors().cast<cplx>() * c;
      const double error = invariant ? 0.0 : beta[m - 1] * std::abs(y[m - 1]);
      if (error <= tolerance_ || h < 1e-14 * span) break;
      h *= 0.5;
    }
    v = beta0 * (basis.leftCols(m) * y);
    done += h;
  }
  return v;
}

StateVector evolve(const StateVector& state, const FewModeHamiltonian& hamiltonian, double t) {
  return Propagator(hamiltonian).apply(state, t);
}

StateVector mode_rotation(const StateVector& state, int mode_a, int mode_b, double angle,
                          double phase) {
  require(state.basis != nullptr, "mode_rotation: missing basis");
  const auto& basis = state.basis;
  const int modes = basis->mode_count();
  require(mode_a >= 0 && mode_a < modes && mode_b >= 0 && mode_b < modes && mode_a != mode_b,
          "mode_rotation: invalid mode pair");
  require(basis->closed_under_hopping(),
          "mode_rotation: needs a total-number truncated basis (total_at_most or number_sector)");
  if (angle == 0.0) return state;
  // U = exp(-i angle K), K = i e^{i phase} a^dag b - i e^{-i phase} b^dag a
  CMatrix k = CMatrix::Zero(modes, modes);
  k(mode_a, mode_b) = kI * std::polar(1.0, phase);
  k(mode_b, mode_a) = -kI * std::polar(1.0, -phase);
  auto generator = few_mode_hamiltonian(k, RMatrix::Zero(modes, modes), basis);
  return Propagator(std::move(generator)).apply(state, angle);
}

StateVector beam_splitter(const StateVector& state, double mixing_angle, int spin_index,
                          double phase) {
  require(state.basis && state.basis->mode_count() == 4,
          "beam_splitter: state must cover the four modes (a1, a2, b1, b2)");
  require(spin_index == 0 || spin_index == 1, "beam_splitter: spin index must be 0 or 1");
  return mode_rotation(state, spin_index, 2 + spin_index, mixing_angle, phase);
}

}  // namespace qdyn
