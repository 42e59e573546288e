#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qdyn/common.hpp"

namespace qdyn {

enum class Units {
  dimensionless,  // hbar = 1
  si,
};

inline constexpr double kHbarSI = 1.054571817e-34;

/// Periodic lattice discretization of a box, one to three axes, S spin components.
///
/// Mode index layout is spin-major: `mode = spin * cells() + cell`, with the cell
/// index row-major over axes (last axis fastest).
struct LatticeSpec {
  std::vector<int> dims;            // cells per axis
  std::vector<double> box_length;   // L per axis
  int spin_count = 1;
  std::vector<double> mass;         // per spin
  Units units = Units::dimensionless;

  void validate() const;

  int axes() const { return static_cast<int>(dims.size()); }
  int cells() const;
  int mode_count() const { return spin_count * cells(); }
  double volume() const;
  double cell_volume() const { return volume() / cells(); }
  double momentum_spacing(int axis) const;
  double hbar() const { return units == Units::si ? kHbarSI : 1.0; }

  /// Signed momentum index in (-M/2, M/2] for raw FFT index j on `axis`.
  int signed_index(int axis, int j) const;
  /// Per-axis raw indices of a flat cell index.
  std::vector<int> unflatten(int cell) const;
};

/// Unitary discrete Fourier transform between k-modes and lattice sites,
/// a_n = cells^{-1/2} sum_k a_k exp(+2 pi i k.n / M), applied per spin block.
class ModeTransform {
 public:
  explicit ModeTransform(const LatticeSpec& lattice);
  ~ModeTransform();
  ModeTransform(const ModeTransform&) = delete;
  ModeTransform& operator=(const ModeTransform&) = delete;

  void to_sites(std::span<const cplx> k_field, std::span<cplx> site_field) const;
  void to_modes(std::span<const cplx> site_field, std::span<cplx> k_field) const;

  CVector to_sites(const CVector& k_field) const;
  CVector to_modes(const CVector& site_field) const;

  int cells() const { return cells_; }
  int spin_count() const { return spins_; }

 private:
  void execute(bool backward, std::span<const cplx> in, std::span<cplx> out) const;

  int cells_;
  int spins_;
  void* plan_backward_ = nullptr;
  void* plan_forward_ = nullptr;
};

/// Time dependent inter-spin coupling, returns an S x S Hermitian matrix (frequency units).
using RabiCoupling = std::function<CMatrix(double)>;

/// Lattice Bose-Hubbard model with local interactions. Immutable after construction.
class HubbardModel {
 public:
  HubbardModel(LatticeSpec lattice, std::vector<double> potential, RMatrix chi,
               std::vector<double> internal_energy = {}, RabiCoupling coupling = {});

  const LatticeSpec& lattice() const { return lattice_; }
  const ModeTransform& transform() const { return *transform_; }
  const RMatrix& chi() const { return chi_; }
  int mode_count() const { return lattice_.mode_count(); }
  double cell_volume() const { return lattice_.cell_volume(); }

  /// hbar k^2 / 2 m_s (frequency units) for every k mode of one spin, in FFT order.
  std::span<const double> kinetic_spectrum(int spin) const;
  /// Local potential plus internal energy, V_s(x)/hbar + omega_s, per mode.
  std::span<const double> local_frequency() const { return local_; }
  bool has_coupling() const { return static_cast<bool>(coupling_); }
  CMatrix coupling(double t) const;

  /// Dense real-space hopping matrix omega_nn' (kinetic part only).
  CMatrix kinetic_matrix() const;
  /// Dense single-particle matrix: kinetic + local potential + internal energy + coupling(t).
  CMatrix single_particle_matrix(double t = 0.0) const;

  /// out = omega(t) * field, kinetic part applied spectrally.
  void apply_linear(std::span<const cplx> field, std::span<cplx> out, double t = 0.0) const;
  CVector apply_linear(const CVector& field, double t = 0.0) const;

 private:
  LatticeSpec lattice_;
  std::shared_ptr<const ModeTransform> transform_;
  std::vector<double> kinetic_;  // spin-major, FFT order
  std::vector<double> local_;
  RMatrix chi_;
  RabiCoupling coupling_;
};

/// Builds the model with zero interaction; the kinetic operator is ħk²/2m in k space.
HubbardModel build_dispersion(const LatticeSpec& lattice, std::vector<double> potential);

/// Harmonic trap potential V = m/2 sum_a w_a^2 x_a^2 (energy units) sampled at cell
/// centres, centred in the box, for every spin; `frequencies[spin][axis]`.
std::vector<double> harmonic_potential(const LatticeSpec& lattice,
                                       const std::vector<std::vector<double>>& frequencies);

enum class Statistics { boson, fermion };

struct HilbertCount {
  std::optional<boost::multiprecision::cpp_int> exact;  // absent when too large to form
  double log10 = 0.0;
};

/// Number of Fock states: bosons with fixed N, fermions summed over all fillings.
/// The exact integer is formed only when it has at most `max_exact_digits` digits.
HilbertCount hilbert_dimension(std::int64_t particles, std::int64_t modes, Statistics statistics,
                               double max_exact_digits = 20000.0);

}  // namespace qdyn
