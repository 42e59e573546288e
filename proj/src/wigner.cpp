#include "qdyn/wigner.hpp"

#include <cmath>
#include <regex>

namespace qdyn {

namespace {

// prod_s alpha_s^{e_s} over the spins of one cell; alpha_s = alpha[s * cells + cell].
cplx monomial(const CVector& alpha, int cells, int cell, const std::vector<int>& e) {
  cplx v = 1.0;
  for (std::size_t s = 0; s < e.size(); ++s)
    for (int k = 0; k < e[s]; ++k) v *= alpha[static_cast<Eigen::Index>(s) * cells + cell];
  return v;
}

// dO/d alpha_s for O = prod alpha^l.
cplx first_derivative(const CVector& alpha, int cells, int cell, std::vector<int> l, int s) {
  if (l[s] == 0) return 0.0;
  const double factor = l[s];
  --l[s];
  return factor * monomial(alpha, cells, cell, l);
}

cplx second_derivative(const CVector& alpha, int cells, int cell, std::vector<int> l, int s, int k) {
  double factor = l[s];
  if (l[s] == 0) return 0.0;
  --l[s];
  if (l[k] == 0) return 0.0;
  factor *= l[k];
  --l[k];
  return factor * monomial(alpha, cells, cell, l);
}

}  // namespace

int LossChannel::order() const {
  int p = 0;
  for (int l : multiplicity) p += l;
  return p;
}

void LossChannel::validate(int spin_count) const {
  require(static_cast<int>(multiplicity.size()) == spin_count,
          "loss channel: multiplicity needs one entry per spin");
  for (int l : multiplicity) require(l >= 0, "loss channel: negative multiplicity");
  require(order() >= 1, "loss channel: order must be at least 1");
  require(rate >= 0.0 && std::isfinite(rate), "loss channel: rate must be finite and non-negative");
}

WignerSystem::WignerSystem(std::shared_ptr<const HubbardModel> model, WignerOptions options)
    : model_(std::move(model)), options_(std::move(options)) {
  require(model_ != nullptr, "WignerSystem: missing model");
  const auto& lattice = model_->lattice();
  const int spins = lattice.spin_count;
  const int cells = lattice.cells();
  const double dv = lattice.cell_volume();
  chi_cell_ = model_->chi() / dv;
  for (int s = 0; s < spins; ++s) {
    auto k = model_->kinetic_spectrum(s);
    kinetic_.insert(kinetic_.end(), k.begin(), k.end());
  }
  for (const auto& ch : options_.losses) {
    ch.validate(spins);
    channels_.push_back({ch.multiplicity, ch.rate * std::pow(dv, 1.0 - ch.order())});
  }

  sde_.cell_volume = 1.0;
  sde_.noise_tag = NoiseTag::losses;
  sde_.drift = [this](double t, const CVector& x, CVector& d) {
    hamiltonian_drift(t, x, d);
    if (sde_.linear_propagator) {
      // the kinetic term is handled exactly by the linear propagator
      CVector k = model_->transform().to_modes(x);
      for (Eigen::Index m = 0; m < k.size(); ++m) k[m] *= kinetic_[m];
      d += kI * model_->transform().to_sites(k);
    }
    if (!channels_.empty()) {
      CVector loss;
      loss_drift(x, loss);
      d += loss;
    }
  };
  bool has_kinetic = false;
  for (double k : kinetic_) has_kinetic = has_kinetic || k != 0.0;
  has_linear_ = has_kinetic || model_->has_coupling();
  for (double v : model_->local_frequency()) has_linear_ = has_linear_ || v != 0.0;
  if (has_kinetic) {
    sde_.linear_propagator = [this](double, double h, CVector& x) {
      CVector k = model_->transform().to_modes(x);
      for (Eigen::Index m = 0; m < k.size(); ++m) k[m] *= std::polar(1.0, -kinetic_[m] * h);
      x = model_->transform().to_sites(k);
    };
  }
  if (!channels_.empty()) {
    sde_.noise_count = 2 * static_cast<int>(channels_.size()) * cells;
    sde_.diffusion = [this](double, const CVector& x, const RVector& dW, CVector& incr) {
      loss_noise(x, dW, incr);
    };
    bool multiplicative = false;
    for (const auto& ch : options_.losses) multiplicative = multiplicative || ch.order() >= 2;
    if (multiplicative) {
      sde_.stratonovich_correction = [this](double, const CVector& x, CVector& c) {
        loss_correction(x, c);
      };
    }
  }
}

void WignerSystem::hamiltonian_drift(double t, const CVector& alpha, CVector& out) const {
  const auto& lattice = model_->lattice();
  const int spins = lattice.spin_count;
  const int cells = lattice.cells();
  require(alpha.size() == lattice.mode_count(), "wigner: field length does not match the model");
  const CVector linear = has_linear_ ? model_->apply_linear(alpha, t) : CVector::Zero(alpha.size());
  out.resize(alpha.size());
  for (int c = 0; c < cells; ++c) {
    for (int s = 0; s < spins; ++s) {
      double shift = 0.0;
      for (int u = 0; u < spins; ++u) {
        double n = std::norm(alpha[u * cells + c]);
        if (options_.symmetric_correction) n -= (u == s) ? 1.0 : 0.5;
        shift += chi_cell_(s, u) * n;
      }
      const Eigen::Index m = s * cells + c;
      out[m] = -kI * (linear[m] + shift * alpha[m]);
    }
  }
}

void WignerSystem::loss_drift(const CVector& alpha, CVector& out) const {
  const int cells = model_->lattice().cells();
  const int spins = model_->lattice().spin_count;
  out = CVector::Zero(alpha.size());
  for (const auto& ch : channels_) {
    for (int c = 0; c < cells; ++c) {
      const cplx o = monomial(alpha, cells, c, ch.multiplicity);
      for (int s = 0; s < spins; ++s) {
        const cplx d = first_derivative(alpha, cells, c, ch.multiplicity, s);
        out[s * cells + c] -= ch.rate * std::conj(d) * o;
      }
    }
  }
}

void WignerSystem::loss_noise(const CVector& alpha, const RVector& dW, CVector& incr) const {
  const int cells = model_->lattice().cells();
  const int spins = model_->lattice().spin_count;
  incr = CVector::Zero(alpha.size());
  const double r = std::sqrt(0.5);
  for (std::size_t j = 0; j < channels_.size(); ++j) {
    const auto& ch = channels_[j];
    const double amp = std::sqrt(ch.rate);
    for (int c = 0; c < cells; ++c) {
      const Eigen::Index slot = 2 * (static_cast<Eigen::Index>(j) * cells + c);
      const cplx zeta(r * dW[slot], r * dW[slot + 1]);
      for (int s = 0; s < spins; ++s) {
        const cplx d = first_derivative(alpha, cells, c, ch.multiplicity, s);
        incr[s * cells + c] += amp * std::conj(d) * zeta;
      }
    }
  }
}

void WignerSystem::loss_correction(const CVector& alpha, CVector& out) const {
  // beta_s = sqrt(kappa) conj(dO/d alpha_s) depends on conj(alpha) only, so the
  // Stratonovich shift is -1/2 sum_k beta_k^* d beta_s / d alpha_k^*.
  const int cells = model_->lattice().cells();
  const int spins = model_->lattice().spin_count;
  out = CVector::Zero(alpha.size());
  for (const auto& ch : channels_) {
    for (int c = 0; c < cells; ++c) {
      for (int s = 0; s < spins; ++s) {
        cplx sum = 0.0;
        for (int k = 0; k < spins; ++k) {
          const cplx dk = first_derivative(alpha, cells, c, ch.multiplicity, k);
          sum += dk * std::conj(second_derivative(alpha, cells, c, ch.multiplicity, s, k));
        }
        out[s * cells + c] -= 0.5 * ch.rate * sum;
      }
    }
  }
}

double WignerSystem::energy(const CVector& alpha, double t) const {
  const auto& lattice = model_->lattice();
  const int spins = lattice.spin_count;
  const int cells = lattice.cells();
  double e = has_linear_ ? alpha.dot(model_->apply_linear(alpha, t)).real() : 0.0;
  for (int c = 0; c < cells; ++c) {
    for (int s = 0; s < spins; ++s) {
      const double ns = std::norm(alpha[s * cells + c]);
      for (int u = 0; u < spins; ++u) {
        const double nu = std::norm(alpha[u * cells + c]);
        e += 0.5 * chi_cell_(s, u) * ns * nu;
        if (options_.symmetric_correction) e -= chi_cell_(s, u) * ((u == s) ? 1.0 : 0.5) * ns;
      }
    }
  }
  return e;
}

StepStatus WignerSystem::step(CVector& alpha, double t, std::uint32_t step,
                              const NoiseStream& stream) const {
  return sde_step(sde_, options_.scheme, stream, step, t, alpha);
}

CVector sample_initial_wigner(const CVector& mean_field, const NoiseStream& stream) {
  const auto n = mean_field.size();
  std::vector<double> g(static_cast<std::size_t>(2 * n));
  stream.normals(0, NoiseTag::initial, g);
  CVector alpha(n);
  for (Eigen::Index m = 0; m < n; ++m) alpha[m] = mean_field[m] + 0.5 * cplx(g[2 * m], g[2 * m + 1]);
  return alpha;
}

const std::vector<std::string>& wigner_spin_moment_names() {
  static const std::vector<std::string> names{"Jx",   "Jy",   "Jz",   "JxJx", "JyJy",
                                              "JzJz", "JxJy", "JxJz", "JyJz", "Nraw"};
  return names;
}

std::vector<std::string> expand_wigner_observables(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& n : names) {
    if (n == "spin") {
      const auto& s = wigner_spin_moment_names();
      out.insert(out.end(), s.begin(), s.end());
    } else {
      out.push_back(n);
    }
  }
  return out;
}

namespace {

using Evaluator = std::function<cplx(const CVector&, double)>;

std::vector<Evaluator> compile_observables(const std::vector<std::string>& names,
                                           const WignerSystem& system) {
  const auto& lattice = system.model().lattice();
  const int cells = lattice.cells();
  const int spins = lattice.spin_count;
  const int modes = lattice.mode_count();
  static const std::regex indexed(R"(^(a|X|n|N)\[(\d+)\]$)");
  std::vector<Evaluator> out;
  bool spin_needed = false;
  for (const auto& name : names) {
    std::smatch match;
    if (std::regex_match(name, match, indexed)) {
      const std::string kind = match[1];
      const int i = std::stoi(match[2]);
      if (kind == "N") {
        require(i < spins, "observable " + name + ": spin index out of range");
        out.push_back([i, cells](const CVector& a, double) {
          return cplx(a.segment(static_cast<Eigen::Index>(i) * cells, cells).squaredNorm() - 0.5 * cells);
        });
        continue;
      }
      require(i < modes, "observable " + name + ": mode index out of range");
      if (kind == "a") out.push_back([i](const CVector& a, double) { return a[i]; });
      if (kind == "X") out.push_back([i](const CVector& a, double) { return cplx(a[i].real()); });
      if (kind == "n") out.push_back([i](const CVector& a, double) { return cplx(std::norm(a[i]) - 0.5); });
      continue;
    }
    if (name == "N") {
      out.push_back([modes](const CVector& a, double) { return cplx(a.squaredNorm() - 0.5 * modes); });
    } else if (name == "energy") {
      out.push_back([&system](const CVector& a, double t) { return cplx(system.energy(a, t)); });
    } else if (std::find(wigner_spin_moment_names().begin(), wigner_spin_moment_names().end(), name) !=
               wigner_spin_moment_names().end()) {
      spin_needed = true;
      const auto idx = std::find(wigner_spin_moment_names().begin(), wigner_spin_moment_names().end(), name) -
                       wigner_spin_moment_names().begin();
      out.push_back([idx, cells](const CVector& a, double) {
        double jx = 0, jy = 0, jz = 0;
        for (int c = 0; c < cells; ++c) {
          const cplx raise = std::conj(a[cells + c]) * a[c];  // a2^dag a1
          jx += raise.real();
          jy += raise.imag();
          jz += 0.5 * (std::norm(a[cells + c]) - std::norm(a[c]));
        }
        const double v[10] = {jx,      jy,      jz,      jx * jx, jy * jy, jz * jz,
                              jx * jy, jx * jz, jy * jz, a.squaredNorm()};
        return cplx(v[idx]);
      });
    } else {
      throw InvalidInput("unknown wigner observable '" + name + "'");
    }
  }
  if (spin_needed) require(spins == 2, "spin observables need exactly two spin components");
  return out;
}

}  // namespace

void validate_problem(const WignerProblemSpec& spec) {
  require(spec.model != nullptr, "run_wigner: missing model");
  require(spec.initial.size() == spec.model->mode_count(),
          "run_wigner: initial field length does not match the model");
  const WignerSystem system(spec.model, spec.options);
  compile_observables(expand_wigner_observables(spec.observables), system);
}

EnsembleResult run_wigner(const WignerProblemSpec& spec, EnsembleConfig config) {
  require(spec.model != nullptr, "run_wigner: missing model");
  require(spec.initial.size() == spec.model->mode_count(),
          "run_wigner: initial field length does not match the model");
  WignerOptions options = spec.options;
  options.scheme.dt = config.dt;
  const WignerSystem system(spec.model, options);
  const auto names = expand_wigner_observables(spec.observables);
  const auto evaluators = compile_observables(names, system);

  EnsembleProblem<CVector> problem;
  problem.observables = names;
  problem.sample = [&spec](const NoiseStream& s) { return sample_initial_wigner(spec.initial, s); };
  problem.advance = [&system](CVector& a, double t, std::uint32_t step, const NoiseStream& s) {
    return system.step(a, t, step, s);
  };
  problem.observe = [&evaluators](const CVector& a, double t, std::span<cplx> values) {
    for (std::size_t i = 0; i < evaluators.size(); ++i) values[i] = evaluators[i](a, t);
    return 1.0;
  };
  return run_ensemble(problem, config);
}

SqueezingParameter wigner_xi2(std::span<const double> raw, int cells) {
  require(raw.size() == wigner_spin_moment_names().size(), "wigner_xi2: wrong moment count");
  const Eigen::Vector3d mean(raw[0], raw[1], raw[2]);
  Eigen::Matrix3d second;
  second << raw[3], raw[6], raw[7], raw[6], raw[4], raw[8], raw[7], raw[8], raw[5];
  // symmetric-order averages of J_a J_b exceed the symmetrized products by delta_ab / 8 per cell
  const Eigen::Matrix3d cov = second - mean * mean.transpose() - Eigen::Matrix3d::Identity() * (cells / 8.0);
  const double number = raw[9] - cells;
  return squeezing_parameter(mean, cov, number);
}

Xi2Estimate wigner_xi2(const EnsembleResult& result, std::size_t time, int cells) {
  std::vector<std::size_t> idx;
  for (const auto& n : wigner_spin_moment_names()) idx.push_back(result.index_of(n));
  bool defined = true;
  auto estimator = [&](std::span<const cplx> means) {
    std::vector<double> raw;
    for (auto i : idx) raw.push_back(means[i].real());
    const auto sq = wigner_xi2(raw, cells);
    defined = defined && sq.defined;
    return sq.xi2;
  };
  Xi2Estimate out;
  if (result.group_stats.size() >= 2) {
    const auto e = jackknife(result, time, estimator);
    out.xi2 = e.value;
    out.error = e.error;
  } else {
    std::vector<cplx> means(result.observables.size());
    for (std::size_t o = 0; o < means.size(); ++o) means[o] = result.mean(o, time);
    out.xi2 = estimator(means);
  }
  out.defined = defined;
  return out;
}

}  // namespace qdyn
