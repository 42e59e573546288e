#include "qdyn/plusp.hpp"

#include <cmath>
#include <numbers>
#include <regex>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace qdyn {

namespace {

const cplx kSqrtMinusI = std::sqrt(cplx(0.0, -1.0));
const cplx kSqrtPlusI = std::sqrt(cplx(0.0, 1.0));

// largest mode count for which the single-particle part is propagated with a dense matrix
constexpr int kDenseLinearLimit = 256;

// Complex Gaussian with E|z|^2 = variance.
cplx complex_normal(NoiseSequence& seq, double variance) {
  const double s = std::sqrt(0.5 * variance);
  const double re = seq.normal();
  return s * cplx(re, seq.normal());
}

}  // namespace

StateFamily parse_state_family(const std::string& name) {
  if (name == "coherent") return StateFamily::coherent;
  if (name == "thermal") return StateFamily::thermal;
  if (name == "fock") return StateFamily::fock;
  throw InvalidInput("unsupported state family '" + name + "' (expected coherent|thermal|fock)");
}

std::string to_string(StateFamily family) {
  switch (family) {
    case StateFamily::coherent: return "coherent";
    case StateFamily::thermal: return "thermal";
    case StateFamily::fock: return "fock";
  }
  return "?";
}

PlusPSampling parse_plusp_sampling(const std::string& name) {
  if (name == "canonical") return PlusPSampling::canonical;
  if (name == "delta") return PlusPSampling::delta;
  throw InvalidInput("unknown +P sampling '" + name + "' (expected canonical|delta)");
}

std::string to_string(PlusPSampling sampling) {
  return sampling == PlusPSampling::canonical ? "canonical" : "delta";
}

int InitialState::mode_count() const {
  return family == StateFamily::coherent ? static_cast<int>(amplitude.size())
                                         : static_cast<int>(occupation.size());
}

void InitialState::validate() const {
  require(mode_count() > 0, "initial state: no modes");
  if (family == StateFamily::coherent) {
    for (Eigen::Index m = 0; m < amplitude.size(); ++m)
      require(std::isfinite(amplitude[m].real()) && std::isfinite(amplitude[m].imag()),
              "initial state: non-finite coherent amplitude");
    return;
  }
  for (double n : occupation) {
    require(std::isfinite(n) && n >= 0.0, "initial state: occupation must be finite and non-negative");
    if (family == StateFamily::fock) require(n == std::floor(n), "initial state: Fock occupation must be an integer");
  }
}

InitialState InitialState::coherent(CVector amplitude) {
  InitialState s;
  s.family = StateFamily::coherent;
  s.amplitude = std::move(amplitude);
  return s;
}

InitialState InitialState::thermal(std::vector<double> mean_occupation) {
  InitialState s;
  s.family = StateFamily::thermal;
  s.occupation = std::move(mean_occupation);
  return s;
}

InitialState InitialState::fock(std::vector<int> occupation) {
  InitialState s;
  s.family = StateFamily::fock;
  s.occupation.assign(occupation.begin(), occupation.end());
  return s;
}

PlusPTrajectory sample_plusp(const InitialState& state, PlusPSampling sampling, const NoiseStream& stream) {
  state.validate();
  const int modes = state.mode_count();
  NoiseSequence seq(stream, 0, NoiseTag::initial);
  PlusPTrajectory traj;
  traj.alpha.resize(modes);
  traj.beta.resize(modes);

  if (sampling == PlusPSampling::delta) {
    require(state.family != StateFamily::fock,
            "delta sampling has no classical P function for Fock states; use canonical sampling");
    for (int m = 0; m < modes; ++m) {
      const cplx a = state.family == StateFamily::coherent ? state.amplitude[m]
                                                           : complex_normal(seq, state.occupation[m]);
      traj.alpha[m] = a;
      traj.beta[m] = std::conj(a);
    }
    return traj;
  }

  for (int m = 0; m < modes; ++m) {
    // mu from the Husimi function, gamma = alpha - beta^* from the canonical Gaussian
    cplx mu;
    switch (state.family) {
      case StateFamily::coherent: mu = state.amplitude[m] + complex_normal(seq, 1.0); break;
      case StateFamily::thermal: mu = complex_normal(seq, state.occupation[m] + 1.0); break;
      case StateFamily::fock: {
        const double r2 = seq.gamma(state.occupation[m] + 1.0);
        mu = std::polar(std::sqrt(r2), 2.0 * std::numbers::pi * seq.uniform());
        break;
      }
    }
    const cplx gamma = complex_normal(seq, 4.0);
    traj.alpha[m] = mu + 0.5 * gamma;
    traj.beta[m] = std::conj(mu - 0.5 * gamma);
  }
  return traj;
}

PlusPSystem::PlusPSystem(std::shared_ptr<const HubbardModel> model, PlusPOptions options)
    : model_(std::move(model)), options_(std::move(options)) {
  require(model_ != nullptr, "PlusPSystem: missing model");
  const auto& lattice = model_->lattice();
  const int spins = lattice.spin_count;
  const int cells = lattice.cells();
  chi_cell_ = model_->chi() / lattice.cell_volume();

  // chi = V diag(lambda) V^T, L = V diag(sqrt(lambda)) with complex roots of negative eigenvalues
  Eigen::SelfAdjointEigenSolver<RMatrix> eig(chi_cell_);
  noise_factor_ = CMatrix::Zero(spins, spins);
  for (int j = 0; j < spins; ++j) {
    const cplx root = std::sqrt(cplx(eig.eigenvalues()[j], 0.0));
    noise_factor_.col(j) = eig.eigenvectors().col(j).cast<cplx>() * root;
  }

  for (int s = 0; s < spins; ++s) {
    auto k = model_->kinetic_spectrum(s);
    kinetic_.insert(kinetic_.end(), k.begin(), k.end());
  }
  bool has_kinetic = false;
  for (double k : kinetic_) has_kinetic = has_kinetic || k != 0.0;
  bool has_potential = false;
  for (double v : model_->local_frequency()) has_potential = has_potential || v != 0.0;
  if (!model_->has_coupling() && has_potential && model_->mode_count() <= kDenseLinearLimit) {
    Eigen::SelfAdjointEigenSolver<CMatrix> sp(model_->single_particle_matrix());
    const double h = 0.5 * options_.scheme.dt;
    half_step_ = sp.eigenvectors() *
                 sp.eigenvalues().unaryExpr([h](double e) { return std::polar(1.0, -e * h); }).asDiagonal() *
                 sp.eigenvectors().adjoint();
    linear_ = Linear::dense;
  } else if (has_kinetic) {
    linear_ = Linear::kinetic;
  } else if (!model_->has_coupling() && !has_potential) {
    linear_ = Linear::none;
  }
  if (options_.reversal_time) {
    const double tr = *options_.reversal_time;
    require(tr >= 0.0 && std::isfinite(tr), "+P: reversal time must be finite and non-negative");
    const double steps = tr / options_.scheme.dt;
    require(std::fabs(steps - std::round(steps)) < 1e-9 * std::max(1.0, steps),
            "+P: reversal time must be a multiple of dt");
  }
  if (options_.gauge) require(static_cast<bool>(options_.gauge->function), "+P: gauge without a function");

  sde_.cell_volume = 1.0;
  sde_.noise_tag = NoiseTag::dynamics;
  sde_.noise_count = 2 * spins * cells;
  sde_.drift = [this](double t, const CVector& x, CVector& d) { drift(t, x, d); };
  sde_.diffusion = [this](double t, const CVector& x, const RVector& dW, CVector& incr) {
    diffusion(t, x, dW, incr);
  };
  sde_.stratonovich_correction = [this](double t, const CVector& x, CVector& c) { correction(t, x, c); };
  if (linear_ == Linear::kinetic || linear_ == Linear::dense) {
    sde_.linear_propagator = [this](double t, double h, CVector& x) {
      const Eigen::Index modes = model_->mode_count();
      const double sign = hamiltonian_sign(t + 0.5 * h);
      if (linear_ == Linear::dense) {
        require(std::fabs(h - 0.5 * options_.scheme.dt) <= 1e-12 * h, "+P: propagator step does not match dt");
        // beta evolves as alpha^*, and the reversed propagator is the adjoint
        if (sign > 0.0) {
          x.head(modes) = half_step_ * x.head(modes);
          x.segment(modes, modes) = half_step_.conjugate() * x.segment(modes, modes);
        } else {
          x.head(modes) = half_step_.adjoint() * x.head(modes);
          x.segment(modes, modes) = half_step_.transpose() * x.segment(modes, modes);
        }
        return;
      }
      auto propagate = [&](CVector v) {
        CVector k = model_->transform().to_modes(v);
        for (Eigen::Index m = 0; m < k.size(); ++m) k[m] *= std::polar(1.0, -sign * kinetic_[m] * h);
        return model_->transform().to_sites(k);
      };
      x.head(modes) = propagate(x.head(modes));
      x.segment(modes, modes) = propagate(x.segment(modes, modes).conjugate()).conjugate();
    };
  }
}

double PlusPSystem::hamiltonian_sign(double t) const {
  if (!options_.reversal_time) return 1.0;
  return t < *options_.reversal_time - 1e-9 * options_.scheme.dt ? 1.0 : -1.0;
}

CVector PlusPSystem::pack(const PlusPTrajectory& traj) const {
  const Eigen::Index modes = model_->mode_count();
  require(traj.alpha.size() == modes && traj.beta.size() == modes, "+P: trajectory length does not match the model");
  CVector x(2 * modes + 1);
  x.head(modes) = traj.alpha;
  x.segment(modes, modes) = traj.beta;
  x[2 * modes] = traj.log_weight;
  return x;
}

void PlusPSystem::unpack(const CVector& x, PlusPTrajectory& traj) const {
  const Eigen::Index modes = model_->mode_count();
  traj.alpha = x.head(modes);
  traj.beta = x.segment(modes, modes);
  traj.log_weight = x[2 * modes];
}

void PlusPSystem::drift(double t, const CVector& x, CVector& out) const {
  const auto& lattice = model_->lattice();
  const int spins = lattice.spin_count;
  const int cells = lattice.cells();
  const Eigen::Index modes = lattice.mode_count();
  const double sign = hamiltonian_sign(t);
  const CVector alpha = x.head(modes);
  const CVector beta = x.segment(modes, modes);

  CVector la = CVector::Zero(modes), lb = CVector::Zero(modes);
  if (linear_ == Linear::drift || linear_ == Linear::kinetic) {
    la = model_->apply_linear(alpha, t);
    lb = model_->apply_linear(CVector(beta.conjugate()), t).conjugate();
  }
  if (linear_ == Linear::kinetic) {
    auto kinetic = [&](const CVector& v) {
      CVector k = model_->transform().to_modes(v);
      for (Eigen::Index m = 0; m < k.size(); ++m) k[m] *= kinetic_[m];
      return model_->transform().to_sites(k);
    };
    la -= kinetic(alpha);
    lb -= kinetic(CVector(beta.conjugate())).conjugate();
  }

  out = CVector::Zero(x.size());
  for (int c = 0; c < cells; ++c) {
    for (int s = 0; s < spins; ++s) {
      cplx shift = 0.0;
      for (int u = 0; u < spins; ++u) shift += chi_cell_(s, u) * alpha[u * cells + c] * beta[u * cells + c];
      const Eigen::Index m = s * cells + c;
      out[m] = -kI * sign * (la[m] + shift * alpha[m]);
      out[modes + m] = kI * sign * (lb[m] + shift * beta[m]);
    }
  }

  if (options_.gauge) {
    CVector g(sde_.noise_count);
    options_.gauge->function(t, alpha, beta, g);
    require(g.size() == sde_.noise_count, "+P: gauge returned the wrong number of entries");
    CVector bg;
    apply_noise_matrix(t, x, g, bg);
    out.head(2 * modes) -= bg.head(2 * modes);
    out[2 * modes] = -0.5 * (g.transpose() * g)(0);
  }
}

void PlusPSystem::apply_noise_matrix(double t, const CVector& x, const CVector& w, CVector& out) const {
  const auto& lattice = model_->lattice();
  const int spins = lattice.spin_count;
  const int cells = lattice.cells();
  const Eigen::Index modes = lattice.mode_count();
  // after reversal chi -> -chi, whose factor is i L
  const cplx flip = hamiltonian_sign(t) > 0.0 ? cplx(1.0) : kI;
  out = CVector::Zero(x.size());
  const Eigen::Index beta_slots = static_cast<Eigen::Index>(spins) * cells;
  for (int c = 0; c < cells; ++c) {
    for (int s = 0; s < spins; ++s) {
      cplx na = 0.0, nb = 0.0;
      for (int j = 0; j < spins; ++j) {
        na += noise_factor_(s, j) * w[c * spins + j];
        nb += noise_factor_(s, j) * w[beta_slots + c * spins + j];
      }
      const Eigen::Index m = s * cells + c;
      out[m] = flip * kSqrtMinusI * x[m] * na;
      out[modes + m] = flip * kSqrtPlusI * x[modes + m] * nb;
    }
  }
}

void PlusPSystem::diffusion(double t, const CVector& x, const RVector& dW, CVector& incr) const {
  apply_noise_matrix(t, x, dW.cast<cplx>(), incr);
  if (options_.gauge) {
    const Eigen::Index modes = model_->mode_count();
    CVector g(sde_.noise_count);
    options_.gauge->function(t, x.head(modes), x.segment(modes, modes), g);
    incr[2 * modes] = (g.transpose() * dW.cast<cplx>())(0);
  }
}

void PlusPSystem::correction(double t, const CVector& x, CVector& out) const {
  // -1/2 sum_k b_kj d b_ij / d x_k; only the diagonal chi_ss survives
  const auto& lattice = model_->lattice();
  const int spins = lattice.spin_count;
  const int cells = lattice.cells();
  const Eigen::Index modes = lattice.mode_count();
  const double sign = hamiltonian_sign(t);
  out = CVector::Zero(x.size());
  for (int s = 0; s < spins; ++s) {
    const cplx factor = 0.5 * kI * sign * chi_cell_(s, s);
    for (int c = 0; c < cells; ++c) {
      const Eigen::Index m = s * cells + c;
      out[m] = factor * x[m];
      out[modes + m] = -factor * x[modes + m];
    }
  }
  if (options_.gauge && options_.gauge->stratonovich_log_weight)
    out[2 * modes] = options_.gauge->stratonovich_log_weight(t, x.head(modes), x.segment(modes, modes));
}

StepStatus PlusPSystem::step(PlusPTrajectory& traj, double t, std::uint32_t step,
                             const NoiseStream& stream) const {
  CVector x = pack(traj);
  const auto status = sde_step(sde_, options_.scheme, stream, step, t, x);
  unpack(x, traj);
  return status;
}

cplx normally_ordered_product(const PlusPTrajectory& traj, const std::vector<int>& creation,
                              const std::vector<int>& annihilation) {
  cplx v = 1.0;
  for (int i : creation) {
    require(i >= 0 && i < traj.beta.size(), "moment: creation index out of range");
    v *= traj.beta[i];
  }
  for (int j : annihilation) {
    require(j >= 0 && j < traj.alpha.size(), "moment: annihilation index out of range");
    v *= traj.alpha[j];
  }
  return v;
}

namespace {

using Evaluator = std::function<cplx(const PlusPTrajectory&)>;

std::vector<int> parse_index_list(const std::string& text, const std::string& name) {
  std::vector<int> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    require(!item.empty() && item.find_first_not_of("0123456789") == std::string::npos,
            "observable " + name + ": bad index list");
    out.push_back(std::stoi(item));
  }
  return out;
}

std::vector<Evaluator> compile_observables(const std::vector<std::string>& names, const HubbardModel& model) {
  const int cells = model.lattice().cells();
  const int spins = model.lattice().spin_count;
  const int modes = model.mode_count();
  static const std::regex indexed(R"(^(a|ad|n|X|Y|N|alpha2)\[(\d+)\]$)");
  static const std::regex moment(R"(^moment\[([0-9,]*)\|([0-9,]*)\]$)");
  std::vector<Evaluator> out;
  for (const auto& name : names) {
    std::smatch match;
    if (std::regex_match(name, match, indexed)) {
      const std::string kind = match[1];
      const int i = std::stoi(match[2]);
      if (kind == "N") {
        require(i < spins, "observable " + name + ": spin index out of range");
        out.push_back([i, cells](const PlusPTrajectory& p) {
          const auto seg = static_cast<Eigen::Index>(i) * cells;
          return p.beta.segment(seg, cells).transpose() * p.alpha.segment(seg, cells);
        });
        continue;
      }
      require(i < modes, "observable " + name + ": mode index out of range");
      if (kind == "a") out.push_back([i](const PlusPTrajectory& p) { return p.alpha[i]; });
      if (kind == "ad") out.push_back([i](const PlusPTrajectory& p) { return p.beta[i]; });
      if (kind == "n") out.push_back([i](const PlusPTrajectory& p) { return p.beta[i] * p.alpha[i]; });
      if (kind == "X") out.push_back([i](const PlusPTrajectory& p) { return 0.5 * (p.alpha[i] + p.beta[i]); });
      if (kind == "Y")
        out.push_back([i](const PlusPTrajectory& p) { return (p.alpha[i] - p.beta[i]) / (2.0 * kI); });
      if (kind == "alpha2") out.push_back([i](const PlusPTrajectory& p) { return cplx(std::norm(p.alpha[i])); });
      continue;
    }
    if (std::regex_match(name, match, moment)) {
      const auto c = parse_index_list(match[1], name);
      const auto a = parse_index_list(match[2], name);
      for (int i : c) require(i < modes, "observable " + name + ": mode index out of range");
      for (int i : a) require(i < modes, "observable " + name + ": mode index out of range");
      out.push_back([c, a](const PlusPTrajectory& p) { return normally_ordered_product(p, c, a); });
      continue;
    }
    if (name == "N") {
      out.push_back([](const PlusPTrajectory& p) { return cplx(p.beta.transpose() * p.alpha); });
    } else if (name == "weight") {
      out.push_back([](const PlusPTrajectory&) { return cplx(1.0); });
    } else {
      throw InvalidInput("unknown +P observable '" + name + "'");
    }
  }
  return out;
}

}  // namespace

void validate_problem(const PlusPProblemSpec& spec) {
  require(spec.model != nullptr, "run_plusp: missing model");
  spec.initial.validate();
  require(spec.initial.mode_count() == spec.model->mode_count(),
          "run_plusp: initial state length does not match the model");
  const PlusPSystem system(spec.model, spec.options);
  compile_observables(spec.observables, *spec.model);
}

EnsembleResult run_plusp(const PlusPProblemSpec& spec, EnsembleConfig config) {
  require(spec.model != nullptr, "run_plusp: missing model");
  spec.initial.validate();
  require(spec.initial.mode_count() == spec.model->mode_count(),
          "run_plusp: initial state length does not match the model");
  PlusPOptions options = spec.options;
  options.scheme.dt = config.dt;
  const PlusPSystem system(spec.model, options);
  const auto evaluators = compile_observables(spec.observables, *spec.model);

  EnsembleProblem<PlusPTrajectory> problem;
  problem.observables = spec.observables;
  problem.sample = [&spec](const NoiseStream& s) { return sample_plusp(spec.initial, spec.sampling, s); };
  problem.advance = [&system](PlusPTrajectory& p, double t, std::uint32_t step, const NoiseStream& s) {
    return system.step(p, t, step, s);
  };
  problem.observe = [&evaluators](const PlusPTrajectory& p, double, std::span<cplx> values) {
    const cplx w = p.weight();
    for (std::size_t i = 0; i < evaluators.size(); ++i) values[i] = w * evaluators[i](p);
    return 1.0;
  };
  return run_ensemble(problem, config);
}

TimeReversalReport time_reversal_test(PlusPProblemSpec spec, EnsembleConfig config, double reversal_time,
                                      int samples, int mode, double error_ceiling) {
  require(reversal_time > 0.0, "time reversal: reversal time must be positive");
  require(samples >= 2 && samples % 2 == 0, "time reversal: samples must be even and at least 2");
  require(mode >= 0 && mode < spec.model->mode_count(), "time reversal: mode out of range");
  spec.options.reversal_time = reversal_time;
  const std::string m = std::to_string(mode);
  spec.observables = {"X[" + m + "]", "a[" + m + "]", "alpha2[" + m + "]"};
  // grid points must land on dt multiples
  const double spacing = 2.0 * reversal_time / samples;
  const double per = std::round(spacing / config.dt);
  require(per >= 1.0 && std::fabs(per * config.dt - spacing) < 1e-9 * spacing,
          "time reversal: sample spacing must be a multiple of dt");
  config.times.clear();
  for (int k = 0; k <= samples; ++k) config.times.push_back(k * per * config.dt);
  const auto result = run_plusp(spec, config);

  TimeReversalReport r;
  r.times = config.times;
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    r.x_mean.push_back(result.mean(0, k).real());
    r.x_error.push_back(result.error(0, k).real());
  }
  auto spread = [&](std::size_t k) { return result.mean(2, k).real() - std::norm(result.mean(1, k)); };
  const std::size_t last = r.times.size() - 1;
  r.initial_x = spec.initial.family == StateFamily::coherent ? spec.initial.amplitude[mode].real() : r.x_mean[0];
  r.residual = std::fabs(r.x_mean[last] - r.initial_x);
  r.final_error = r.x_error[last];
  r.initial_spread = spread(0);
  r.final_spread = spread(last);
  r.inconclusive = !(r.final_error <= error_ceiling);
  r.recovered = !r.inconclusive && r.residual <= 2.0 * r.final_error;
  return r;
}

}  // namespace qdyn
