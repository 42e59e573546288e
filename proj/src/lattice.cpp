#include "qdyn/lattice.hpp"

#include <cmath>
#include <mutex>
#include <numeric>

#include <fftw3.h>

namespace qdyn {

namespace {

// FFTW planning is not thread safe; execution on distinct arrays is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void LatticeSpec::validate() const {
  require(!dims.empty() && dims.size() <= 3, "lattice must have 1 to 3 axes");
  require(box_length.size() == dims.size(), "box_length must give one length per axis");
  for (int m : dims) require(m > 0, "cells per axis must be positive");
  for (double l : box_length) require(l > 0.0 && std::isfinite(l), "box length must be positive");
  require(spin_count > 0, "spin_count must be positive");
  require(static_cast<int>(mass.size()) == spin_count, "mass must give one value per spin");
  for (double m : mass) require(m > 0.0 && std::isfinite(m), "mass must be positive");
}

int LatticeSpec::cells() const {
  return std::accumulate(dims.begin(), dims.end(), 1, std::multiplies<>());
}

double LatticeSpec::volume() const {
  return std::accumulate(box_length.begin(), box_length.end(), 1.0, std::multiplies<>());
}

double LatticeSpec::momentum_spacing(int axis) const {
  return 2.0 * kPi / box_length.at(axis);
}

int LatticeSpec::signed_index(int axis, int j) const {
  const int m = dims.at(axis);
  return j <= m / 2 ? j : j - m;
}

std::vector<int> LatticeSpec::unflatten(int cell) const {
  std::vector<int> idx(dims.size());
  for (int a = axes() - 1; a >= 0; --a) {
    idx[a] = cell % dims[a];
    cell /= dims[a];
  }
  return idx;
}

ModeTransform::ModeTransform(const LatticeSpec& lattice)
    : cells_(lattice.cells()), spins_(lattice.spin_count) {
  lattice.validate();
  std::vector<int> n(lattice.dims.begin(), lattice.dims.end());
  std::vector<cplx> scratch_in(cells_), scratch_out(cells_);
  auto* in = reinterpret_cast<fftw_complex*>(scratch_in.data());
  auto* out = reinterpret_cast<fftw_complex*>(scratch_out.data());
  std::lock_guard lock(fftw_planner_mutex());
  plan_backward_ = fftw_plan_dft(lattice.axes(), n.data(), in, out, FFTW_BACKWARD,
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_forward_ = fftw_plan_dft(lattice.axes(), n.data(), in, out, FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
}

ModeTransform::~ModeTransform() {
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_backward_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
}

void ModeTransform::execute(bool backward, std::span<const cplx> in, std::span<cplx> out) const {
  const auto total = static_cast<std::size_t>(cells_) * spins_;
  require(in.size() == total && out.size() == total, "mode_transform: field length mismatch");
  auto plan = static_cast<fftw_plan>(backward ? plan_backward_ : plan_forward_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cells_));
  std::vector<cplx> buffer(in.begin(), in.end());  // FFTW wants non-const input
  for (int s = 0; s < spins_; ++s) {
    auto* src = reinterpret_cast<fftw_complex*>(buffer.data() + s * cells_);
    auto* dst = reinterpret_cast<fftw_complex*>(out.data() + s * cells_);
    fftw_execute_dft(plan, src, dst);
  }
  for (auto& v : out) v *= scale;
}

void ModeTransform::to_sites(std::span<const cplx> k_field, std::span<cplx> site_field) const {
  execute(true, k_field, site_field);
}

void ModeTransform::to_modes(std::span<const cplx> site_field, std::span<cplx> k_field) const {
  execute(false, site_field, k_field);
}

CVector ModeTransform::to_sites(const CVector& k_field) const {
  CVector out(k_field.size());
  to_sites(std::span<const cplx>(k_field.data(), k_field.size()),
           std::span<cplx>(out.data(), out.size()));
  return out;
}

CVector ModeTransform::to_modes(const CVector& site_field) const {
  CVector out(site_field.size());
  to_modes(std::span<const cplx>(site_field.data(), site_field.size()),
           std::span<cplx>(out.data(), out.size()));
  return out;
}

HubbardModel::HubbardModel(LatticeSpec lattice, std::vector<double> potential, RMatrix chi,
                           std::vector<double> internal_energy, RabiCoupling coupling)
    : lattice_(std::move(lattice)), chi_(std::move(chi)), coupling_(std::move(coupling)) {
  lattice_.validate();
  const int cells = lattice_.cells();
  const int spins = lattice_.spin_count;
  const int modes = lattice_.mode_count();
  require(static_cast<int>(potential.size()) == modes,
          "potential length must equal cells x spins (" + std::to_string(modes) + ")");
  require(chi_.rows() == spins && chi_.cols() == spins, "chi must be S x S");
  require(chi_.isApprox(chi_.transpose(), 1e-14) || chi_.isZero(),
          "chi must be symmetric");
  require(internal_energy.empty() || static_cast<int>(internal_energy.size()) == spins,
          "internal_energy must give one value per spin");

  transform_ = std::make_shared<const ModeTransform>(lattice_);
  const double hbar = lattice_.hbar();

  kinetic_.resize(modes);
  for (int s = 0; s < spins; ++s) {
    const double prefactor = hbar / (2.0 * lattice_.mass[s]);
    for (int c = 0; c < cells; ++c) {
      const auto raw = lattice_.unflatten(c);
      double k2 = 0.0;
      for (int a = 0; a < lattice_.axes(); ++a) {
        const double k = lattice_.momentum_spacing(a) * lattice_.signed_index(a, raw[a]);
        k2 += k * k;
      }
      kinetic_[s * cells + c] = prefactor * k2;
    }
  }

  local_.resize(modes);
  for (int s = 0; s < spins; ++s) {
    const double shift = internal_energy.empty() ? 0.0 : internal_energy[s];
    for (int c = 0; c < cells; ++c) {
      local_[s * cells + c] = potential[s * cells + c] / hbar + shift;
    }
  }
}

std::span<const double> HubbardModel::kinetic_spectrum(int spin) const {
  const int cells = lattice_.cells();
  return std::span<const double>(kinetic_).subspan(static_cast<std::size_t>(spin) * cells, cells);
}

CMatrix HubbardModel::coupling(double t) const {
  const int spins = lattice_.spin_count;
  if (!coupling_) return CMatrix::Zero(spins, spins);
  CMatrix c = coupling_(t);
  require(c.rows() == spins && c.cols() == spins, "coupling must return an S x S matrix");
  return c;
}

CMatrix HubbardModel::kinetic_matrix() const {
  const int cells = lattice_.cells();
  const int spins = lattice_.spin_count;
  CMatrix omega = CMatrix::Zero(cells * spins, cells * spins);
  for (int s = 0; s < spins; ++s) {
    auto spectrum = kinetic_spectrum(s);
    for (int n = 0; n < cells; ++n) {
      const auto rn = lattice_.unflatten(n);
      for (int np = 0; np < cells; ++np) {
        const auto rnp = lattice_.unflatten(np);
        cplx sum = 0.0;
        for (int k = 0; k < cells; ++k) {
          const auto kj = lattice_.unflatten(k);
          double phase = 0.0;
          for (int a = 0; a < lattice_.axes(); ++a) {
            phase += 2.0 * kPi * kj[a] * (rn[a] - rnp[a]) / lattice_.dims[a];
          }
          sum += spectrum[k] * std::polar(1.0, phase);
        }
        omega(s * cells + n, s * cells + np) = sum / static_cast<double>(cells);
      }
    }
  }
  return omega;
}

CMatrix HubbardModel::single_particle_matrix(double t) const {
  CMatrix omega = kinetic_matrix();
  const int cells = lattice_.cells();
  const int spins = lattice_.spin_count;
  for (int m = 0; m < omega.rows(); ++m) omega(m, m) += local_[m];
  if (coupling_) {
    const CMatrix c = coupling(t);
    for (int s = 0; s < spins; ++s)
      for (int sp = 0; sp < spins; ++sp)
        for (int n = 0; n < cells; ++n) omega(s * cells + n, sp * cells + n) += c(s, sp);
  }
  return omega;
}

void HubbardModel::apply_linear(std::span<const cplx> field, std::span<cplx> out, double t) const {
  const auto modes = static_cast<std::size_t>(mode_count());
  require(field.size() == modes && out.size() == modes, "apply_linear: field length mismatch");
  std::vector<cplx> k(modes);
  transform_->to_modes(field, k);
  for (std::size_t m = 0; m < modes; ++m) k[m] *= kinetic_[m];
  transform_->to_sites(k, out);
  for (std::size_t m = 0; m < modes; ++m) out[m] += local_[m] * field[m];
  if (coupling_) {
    const CMatrix c = coupling(t);
    const int cells = lattice_.cells();
    const int spins = lattice_.spin_count;
    for (int s = 0; s < spins; ++s)
      for (int sp = 0; sp < spins; ++sp) {
        if (c(s, sp) == 0.0) continue;
        for (int n = 0; n < cells; ++n) out[s * cells + n] += c(s, sp) * field[sp * cells + n];
      }
  }
}

CVector HubbardModel::apply_linear(const CVector& field, double t) const {
  CVector out(field.size());
  apply_linear(std::span<const cplx>(field.data(), field.size()),
               std::span<cplx>(out.data(), out.size()), t);
  return out;
}

HubbardModel build_dispersion(const LatticeSpec& lattice, std::vector<double> potential) {
  return HubbardModel(lattice, std::move(potential),
                      RMatrix::Zero(lattice.spin_count, lattice.spin_count));
}

std::vector<double> harmonic_potential(const LatticeSpec& lattice,
                                       const std::vector<std::vector<double>>& frequencies) {
  lattice.validate();
  require(static_cast<int>(frequencies.size()) == lattice.spin_count,
          "harmonic_potential: one frequency list per spin");
  const int cells = lattice.cells();
  std::vector<double> v(static_cast<std::size_t>(lattice.mode_count()));
  for (int s = 0; s < lattice.spin_count; ++s) {
    require(static_cast<int>(frequencies[s].size()) == lattice.axes(),
            "harmonic_potential: one frequency per axis");
    for (int c = 0; c < cells; ++c) {
      const auto idx = lattice.unflatten(c);
      double e = 0.0;
      for (int a = 0; a < lattice.axes(); ++a) {
        const double dx = lattice.box_length[a] / lattice.dims[a];
        const double x = (idx[a] + 0.5) * dx - 0.5 * lattice.box_length[a];
        e += 0.5 * lattice.mass[s] * frequencies[s][a] * frequencies[s][a] * x * x;
      }
      v[s * cells + c] = e;
    }
  }
  return v;
}

HilbertCount hilbert_dimension(std::int64_t particles, std::int64_t modes, Statistics statistics,
                               double max_exact_digits) {
  require(particles >= 0, "hilbert_dimension: particle count must be non-negative");
  require(modes >= 1, "hilbert_dimension: mode count must be at least 1");
  using boost::multiprecision::cpp_int;
  HilbertCount out;
  if (statistics == Statistics::fermion) {
    out.log10 = static_cast<double>(modes) * std::log10(2.0);
    if (out.log10 <= max_exact_digits) out.exact = cpp_int(1) << static_cast<unsigned>(modes);
    return out;
  }
  const double n = static_cast<double>(particles);
  const double m = static_cast<double>(modes);
  out.log10 = (std::lgamma(m + n) - std::lgamma(m) - std::lgamma(n + 1.0)) / std::log(10.0);
  if (out.log10 <= max_exact_digits) {
    // C(M+N-1, N) built incrementally; every prefix is itself a binomial, so division is exact.
    const std::int64_t k = std::min<std::int64_t>(particles, modes - 1);
    cpp_int c = 1;
    for (std::int64_t i = 1; i <= k; ++i) {
      c *= (modes - 1 + particles - k + i);
      c /= i;
    }
    out.exact = c;
  }
  return out;
}

}  // namespace qdyn
