#include <gtest/gtest.h>

#include <cmath>

#include "qdyn/fock.hpp"
#include "qdyn/kerr.hpp"
#include "qdyn/moments.hpp"
#include "qdyn/wigner.hpp"

using namespace qdyn;

namespace {

std::shared_ptr<const HubbardModel> single_cell(RMatrix chi) {
  LatticeSpec l;
  l.dims = {1};
  l.box_length = {1.0};
  l.spin_count = static_cast<int>(chi.rows());
  l.mass.assign(l.spin_count, 1.0);
  return std::make_shared<const HubbardModel>(l, std::vector<double>(l.spin_count, 0.0), chi);
}

std::shared_ptr<const HubbardModel> ring(int cells, double chi, bool trap) {
  LatticeSpec l;
  l.dims = {cells};
  l.box_length = {8.0};
  l.mass = {1.0};
  std::vector<double> v(cells, 0.0);
  if (trap) v = harmonic_potential(l, {{0.5}});
  return std::make_shared<const HubbardModel>(l, v, RMatrix::Constant(1, 1, chi));
}

RMatrix scalar(double x) { return RMatrix::Constant(1, 1, x); }

CVector field(std::initializer_list<cplx> v) {
  CVector f(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (auto x : v) f[i++] = x;
  return f;
}

}  // namespace

TEST(WignerSampling, QuadratureVarianceIsOneQuarter) {
  const int n = 100000;
  const CVector mean = field({cplx(3.0, -1.0)});
  double s = 0.0, s2 = 0.0, number = 0.0, number2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const CVector a = sample_initial_wigner(mean, NoiseStream(7, i));
    const double x = a[0].real() - 3.0;
    s += x;
    s2 += x * x;
    const double q = std::norm(a[0]) - 0.5;
    number += q;
    number2 += q * q;
  }
  const double var = s2 / n - (s / n) * (s / n);
  EXPECT_NEAR(var, 0.25, 0.0025);
  const double mean_number = number / n;
  const double err = std::sqrt((number2 / n - mean_number * mean_number) / n);
  EXPECT_NEAR(mean_number, 10.0, 4.0 * err);
}

TEST(WignerSampling, VacuumCarriesHalfQuantum) {
  const int n = 50000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::norm(sample_initial_wigner(field({0.0}), NoiseStream(3, i))[0]);
  EXPECT_NEAR(s / n, 0.5, 4.0 * 0.5 / std::sqrt(n));
}

TEST(WignerDrift, FreeEvolutionIsExactInMomentumSpace) {
  auto model = ring(8, 0.0, false);
  WignerOptions opt;
  opt.scheme.dt = 0.01;
  const WignerSystem sys(model, opt);
  CVector a(8);
  for (int i = 0; i < 8; ++i) a[i] = cplx(std::cos(i), 0.3 * i);
  const CVector k0 = model->transform().to_modes(a);
  const NoiseStream stream(1, 0);
  for (int s = 0; s < 100; ++s) sys.step(a, s * 0.01, s, stream);
  const CVector k1 = model->transform().to_modes(a);
  const auto spec = model->kinetic_spectrum(0);
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(std::abs(k1[k] - std::polar(1.0, -spec[k] * 1.0) * k0[k]), 0.0, 1e-12);
}

TEST(WignerDrift, KerrRotatesPhaseAtFixedModulus) {
  for (bool correction : {false, true}) {
    WignerOptions opt;
    opt.symmetric_correction = correction;
    opt.scheme.dt = 1e-3;
    const WignerSystem sys(single_cell(scalar(0.2)), opt);
    CVector a = field({cplx(2.0, 1.0)});
    const double n = std::norm(a[0]);
    const NoiseStream stream(1, 0);
    for (int s = 0; s < 1000; ++s) sys.step(a, s * 1e-3, s, stream);
    const double rate = 0.2 * (correction ? n - 1.0 : n);
    EXPECT_NEAR(std::norm(a[0]), n, 1e-6 * n);
    EXPECT_NEAR(std::abs(a[0] - std::polar(1.0, -rate) * cplx(2.0, 1.0)), 0.0, 1e-6);
  }
}

TEST(WignerDrift, MatchesExactKerrAtShortTimes) {
  // N = 100, chi N t up to 0.2
  const double chi = 0.01, alpha = 10.0;
  WignerProblemSpec spec;
  spec.model = single_cell(scalar(chi));
  spec.initial = field({alpha});
  spec.observables = {"X[0]"};
  EnsembleConfig cfg;
  cfg.trajectories = 4000;
  cfg.dt = 1e-3;
  cfg.times = {0.0, 0.05, 0.1, 0.15, 0.2};
  const auto r = run_wigner(spec, cfg);
  for (std::size_t k = 0; k < cfg.times.size(); ++k) {
    const double exact = kerr_single_mode_mean(alpha, chi, cfg.times[k]).real();
    EXPECT_NEAR(r.mean(0, k).real(), exact, 0.02 * std::fabs(exact));
  }
}

TEST(WignerDrift, LosslessRunConservesNumberAndEnergy) {
  auto model = ring(16, 0.5, true);
  WignerOptions opt;
  opt.scheme.dt = 1e-3;
  const WignerSystem sys(model, opt);
  CVector a = sample_initial_wigner(CVector::Constant(16, cplx(2.0, 0.0)), NoiseStream(5, 0));
  const double n0 = a.squaredNorm(), e0 = sys.energy(a);
  const NoiseStream stream(5, 0);
  for (int s = 0; s < 1000; ++s) sys.step(a, s * 1e-3, s, stream);
  EXPECT_NEAR(a.squaredNorm(), n0, 1e-6 * n0);
  EXPECT_NEAR(sys.energy(a), e0, 1e-6 * std::fabs(e0));
}

TEST(WignerDrift, ZeroInteractionKeepsOccupationsInDistribution) {
  WignerProblemSpec spec;
  spec.model = ring(8, 0.0, true);
  spec.initial = CVector::Constant(8, cplx(1.5, 0.0));
  spec.observables = {"n[0]", "n[3]", "N"};
  EnsembleConfig cfg;
  cfg.trajectories = 2000;
  cfg.dt = 0.01;
  cfg.times = {0.0, 0.5, 1.0};
  const auto r = run_wigner(spec, cfg);
  EXPECT_NEAR(r.mean(2, 2).real(), r.mean(2, 0).real(), 1e-9);
  // momentum mixing redistributes the single-cell numbers but keeps the total
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(r.mean(2, k).real(), 8 * 2.25, 4 * r.error(2, k).real());
}

TEST(WignerLoss, OneBodyDecay) {
  const double kappa = 0.3;
  WignerProblemSpec spec;
  spec.model = single_cell(scalar(0.0));
  spec.initial = field({3.0});
  spec.options.losses = {{{1}, kappa}};
  spec.observables = {"n[0]"};
  EnsembleConfig cfg;
  cfg.trajectories = 4000;
  cfg.dt = 5e-3;
  cfg.times = {0.5, 1.0, 2.0};
  const auto r = run_wigner(spec, cfg);
  for (std::size_t k = 0; k < cfg.times.size(); ++k)
    EXPECT_NEAR(r.mean(0, k).real(), 9.0 * std::exp(-2 * kappa * cfg.times[k]), 4 * r.error(0, k).real());
}

TEST(WignerLoss, ZeroRateIsBitExactWithLosslessRun) {
  WignerProblemSpec spec;
  spec.model = single_cell(scalar(0.1));
  spec.initial = field({2.0});
  spec.observables = {"a[0]", "n[0]"};
  EnsembleConfig cfg;
  cfg.trajectories = 50;
  cfg.dt = 0.01;
  cfg.times = {0.5, 1.0};
  const auto lossless = run_wigner(spec, cfg);
  spec.options.losses = {{{1}, 0.0}, {{2}, 0.0}};
  const auto zero = run_wigner(spec, cfg);
  for (std::size_t o = 0; o < 2; ++o)
    for (std::size_t k = 0; k < 2; ++k) EXPECT_TRUE(lossless.stats[o][k] == zero.stats[o][k]);
}

TEST(WignerLoss, TwoBodyInverseNumberGrowsLinearly) {
  // mean field: dn/dt = -4 kappa n^2, so 1/n = 1/n0 + 4 kappa t
  const double kappa = 1e-3, n0 = 100.0;
  WignerProblemSpec spec;
  spec.model = single_cell(scalar(0.0));
  spec.initial = field({std::sqrt(n0)});
  spec.options.losses = {{{2}, kappa}};
  spec.observables = {"n[0]"};
  EnsembleConfig cfg;
  cfg.trajectories = 2000;
  cfg.dt = 1e-3;
  cfg.times = {0.25, 0.5, 1.0};
  for (auto kind : {SchemeKind::midpoint, SchemeKind::euler}) {
    spec.options.scheme.kind = kind;
    const auto r = run_wigner(spec, cfg);
    for (std::size_t k = 0; k < cfg.times.size(); ++k) {
      const double inverse = 1.0 / r.mean(0, k).real();
      const double slope = (inverse - 1.0 / n0) / cfg.times[k];
      EXPECT_NEAR(slope, 4 * kappa, 0.05 * 4 * kappa) << to_string(kind) << " t=" << cfg.times[k];
    }
  }
}

TEST(WignerSqueezing, CoherentStateIsAtShotNoise) {
  WignerProblemSpec spec;
  spec.model = single_cell(RMatrix::Zero(2, 2));
  spec.initial = field({5.0, 5.0});
  spec.observables = {"spin"};
  EnsembleConfig cfg;
  cfg.trajectories = 20000;
  cfg.groups = 20;
  cfg.dt = 0.01;
  cfg.times = {0.0, 0.5};
  const auto r = run_wigner(spec, cfg);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto x = wigner_xi2(r, k, 1);
    ASSERT_TRUE(x.defined);
    EXPECT_NEAR(x.xi2, 1.0, 4 * x.error);
    EXPECT_GT(x.error, 0.0);
  }
}

TEST(WignerSqueezing, MatchesExactTwoModeEvolution) {
  // one-axis twisting from chi11 + chi22 - 2 chi12 > 0, total N = 100
  RMatrix chi(2, 2);
  chi << 1.0, 0.8, 0.8, 1.0;
  const double amp = std::sqrt(50.0);
  const std::vector<double> times{0.0, 0.02, 0.05, 0.1};
  WignerProblemSpec spec;
  spec.model = single_cell(chi);
  spec.initial = field({amp, amp});
  spec.observables = {"spin"};
  EnsembleConfig cfg;
  cfg.trajectories = 20000;
  cfg.groups = 20;
  cfg.dt = 1e-3;
  cfg.times = times;
  const auto r = run_wigner(spec, cfg);

  auto basis = std::make_shared<const FockBasis>(FockBasis::per_mode(2, poisson_cutoff(50.0)));
  const std::array<cplx, 2> alpha{amp, amp};
  const auto psi = coherent_state(alpha, basis);
  const Propagator prop(few_mode_hamiltonian(CMatrix::Zero(2, 2), chi, basis));
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double exact = squeezing_parameter(FockMoments(prop.apply(psi, times[k])), {0, 1}).xi2;
    const auto w = wigner_xi2(r, k, 1);
    EXPECT_NEAR(w.xi2, exact, 3 * w.error + 0.01) << "t=" << times[k];
    if (k >= 2) EXPECT_LT(w.xi2 + 3 * w.error, 1.0);
  }
}

TEST(WignerInput, RejectsBadChannelsAndObservables) {
  WignerOptions opt;
  opt.losses = {{{1, 1}, 0.1}};
  EXPECT_THROW(WignerSystem(single_cell(scalar(0.0)), opt), InvalidInput);
  opt.losses = {{{0}, 0.1}};
  EXPECT_THROW(WignerSystem(single_cell(scalar(0.0)), opt), InvalidInput);
  WignerProblemSpec spec;
  spec.model = single_cell(scalar(0.0));
  spec.initial = field({1.0});
  spec.observables = {"bogus"};
  EnsembleConfig cfg;
  cfg.times = {0.0};
  EXPECT_THROW(run_wigner(spec, cfg), InvalidInput);
  spec.observables = {"spin"};
  EXPECT_THROW(run_wigner(spec, cfg), InvalidInput);
}
