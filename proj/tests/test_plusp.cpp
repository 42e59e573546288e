#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "qdyn/plusp.hpp"

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

std::shared_ptr<const HubbardModel> trapped_ring(int cells, double chi) {
  LatticeSpec l;
  l.dims = {cells};
  l.box_length = {8.0};
  l.mass = {1.0};
  return std::make_shared<const HubbardModel>(l, harmonic_potential(l, {{0.5}}), RMatrix::Constant(1, 1, chi));
}

RMatrix scalar(double x) { return RMatrix::Constant(1, 1, x); }

CVector field(std::initializer_list<cplx> v) {
  CVector f(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (auto x : v) f[i++] = x;
  return f;
}

// <a^k>(t) for H = (chi/2) a^dag a^dag a a from a coherent state, summed in a Fock basis of
// n_max levels: <a^k> = sum_n c_n^* c_{n+k} sqrt((n+k)!/n!) exp(-i (E_{n+k} - E_n) t).
cplx fock_power_mean(cplx alpha, double chi, double t, int k, int n_max = 200) {
  const double r = std::abs(alpha), phase = std::arg(alpha);
  auto log_c = [&](int n) { return -0.5 * r * r + n * std::log(r) - 0.5 * std::lgamma(n + 1.0); };
  auto energy = [&](int n) { return 0.5 * chi * n * (n - 1.0); };
  cplx sum = 0.0;
  for (int n = 0; n + k <= n_max; ++n) {
    const double mag = std::exp(log_c(n) + log_c(n + k) + 0.5 * (std::lgamma(n + k + 1.0) - std::lgamma(n + 1.0)));
    sum += mag * std::polar(1.0, k * phase - (energy(n + k) - energy(n)) * t);
  }
  return sum;
}

struct Sample {
  double mean = 0.0, error = 0.0;
};

template <class F>
Sample sample_mean(int n, F&& f) {
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = f(i);
    s += v;
    s2 += v * v;
  }
  const double m = s / n;
  return {m, std::sqrt((s2 / n - m * m) / n)};
}

}  // namespace

TEST(PlusPSampling, CoherentCanonicalMoments) {
  const cplx a0(2.0, -1.0);
  const auto state = InitialState::coherent(field({a0}));
  const int n = 100000;
  const auto number = sample_mean(n, [&](int i) {
    const auto p = sample_plusp(state, PlusPSampling::canonical, NoiseStream(11, i));
    return (p.beta[0] * p.alpha[0]).real();
  });
  EXPECT_NEAR(number.mean, std::norm(a0), 4 * number.error);
  const auto fourth = sample_mean(n, [&](int i) {
    const auto p = sample_plusp(state, PlusPSampling::canonical, NoiseStream(12, i));
    return normally_ordered_product(p, {0, 0}, {0, 0}).real();
  });
  EXPECT_NEAR(fourth.mean, std::pow(std::norm(a0), 2), 4 * fourth.error);
  const auto amplitude = sample_mean(n, [&](int i) {
    return sample_plusp(state, PlusPSampling::canonical, NoiseStream(13, i)).alpha[0].imag();
  });
  EXPECT_NEAR(amplitude.mean, a0.imag(), 4 * amplitude.error);
}

TEST(PlusPSampling, VacuumHasZeroNumberAndUnphysicalSpread) {
  const auto state = InitialState::coherent(field({0.0}));
  const int n = 100000;
  const auto number = sample_mean(n, [&](int i) {
    const auto p = sample_plusp(state, PlusPSampling::canonical, NoiseStream(21, i));
    return (p.beta[0] * p.alpha[0]).real();
  });
  EXPECT_NEAR(number.mean, 0.0, 4 * number.error);
  // |alpha|^2 = |mu|^2 + |gamma|^2 / 4 on average: 1 + 1
  const auto spread = sample_mean(n, [&](int i) {
    return std::norm(sample_plusp(state, PlusPSampling::canonical, NoiseStream(22, i)).alpha[0]);
  });
  EXPECT_NEAR(spread.mean, 2.0, 4 * spread.error);
}

TEST(PlusPSampling, ThermalAndFockFactorialMoments) {
  const int n = 100000;
  const double nbar = 1.5;
  const auto thermal = InitialState::thermal({nbar});
  const auto t1 = sample_mean(n, [&](int i) {
    const auto p = sample_plusp(thermal, PlusPSampling::canonical, NoiseStream(31, i));
    return (p.beta[0] * p.alpha[0]).real();
  });
  EXPECT_NEAR(t1.mean, nbar, 4 * t1.error);
  const auto t2 = sample_mean(n, [&](int i) {
    const auto p = sample_plusp(thermal, PlusPSampling::canonical, NoiseStream(32, i));
    return normally_ordered_product(p, {0, 0}, {0, 0}).real();
  });
  EXPECT_NEAR(t2.mean, 2 * nbar * nbar, 4 * t2.error);

  const auto fock = InitialState::fock({3});
  const auto f1 = sample_mean(n, [&](int i) {
    const auto p = sample_plusp(fock, PlusPSampling::canonical, NoiseStream(33, i));
    return (p.beta[0] * p.alpha[0]).real();
  });
  EXPECT_NEAR(f1.mean, 3.0, 4 * f1.error);
  const auto f2 = sample_mean(n, [&](int i) {
    const auto p = sample_plusp(fock, PlusPSampling::canonical, NoiseStream(34, i));
    return normally_ordered_product(p, {0, 0}, {0, 0}).real();
  });
  EXPECT_NEAR(f2.mean, 6.0, 4 * f2.error);
  const auto fa = sample_mean(n, [&](int i) {
    return sample_plusp(fock, PlusPSampling::canonical, NoiseStream(35, i)).alpha[0].real();
  });
  EXPECT_NEAR(fa.mean, 0.0, 4 * fa.error);
}

TEST(PlusPSampling, DeltaSampling) {
  const auto p = sample_plusp(InitialState::coherent(field({cplx(1.0, 2.0)})), PlusPSampling::delta, NoiseStream(1, 0));
  EXPECT_EQ(p.alpha[0], cplx(1.0, 2.0));
  EXPECT_EQ(p.beta[0], cplx(1.0, -2.0));
  EXPECT_EQ(p.weight(), cplx(1.0));
  const auto glauber = sample_mean(50000, [&](int i) {
    const auto q = sample_plusp(InitialState::thermal({2.0}), PlusPSampling::delta, NoiseStream(2, i));
    EXPECT_EQ(q.beta[0], std::conj(q.alpha[0]));
    return (q.beta[0] * q.alpha[0]).real();
  });
  EXPECT_NEAR(glauber.mean, 2.0, 4 * glauber.error);
  EXPECT_THROW(sample_plusp(InitialState::fock({2}), PlusPSampling::delta, NoiseStream(1, 0)), InvalidInput);
}

TEST(PlusPSampling, RejectsBadStates) {
  EXPECT_THROW(parse_state_family("squeezed"), InvalidInput);
  InitialState bad = InitialState::thermal({-1.0});
  EXPECT_THROW(bad.validate(), InvalidInput);
  bad = InitialState::fock({1});
  bad.occupation[0] = 1.5;
  EXPECT_THROW(bad.validate(), InvalidInput);
  EXPECT_THROW(InitialState::coherent(CVector()).validate(), InvalidInput);
}

TEST(PlusPSystemTest, NoiseMatrixReproducesInteraction) {
  // B B^T restricted to the alpha block must equal -i chi_su alpha_s alpha_u, also for an
  // indefinite chi
  RMatrix chi(2, 2);
  chi << 1.0, 1.5, 1.5, 0.5;
  PlusPOptions opt;
  const PlusPSystem sys(single_cell(chi), opt);
  PlusPTrajectory p;
  p.alpha = field({cplx(1.0, 0.5), cplx(-0.3, 2.0)});
  p.beta = field({cplx(0.7, -0.2), cplx(1.1, 0.4)});
  const CVector x = sys.pack(p);
  CMatrix bb = CMatrix::Zero(4, 4);
  for (int j = 0; j < sys.noise_count(); ++j) {
    RVector e = RVector::Zero(sys.noise_count());
    e[j] = 1.0;
    CVector col;
    sys.sde().diffusion(0.0, x, e, col);
    bb += col.head(4) * col.head(4).transpose();
  }
  for (int s = 0; s < 2; ++s)
    for (int u = 0; u < 2; ++u) {
      EXPECT_NEAR(std::abs(bb(s, u) - (-kI * chi(s, u) * p.alpha[s] * p.alpha[u])), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(bb(2 + s, 2 + u) - (kI * chi(s, u) * p.beta[s] * p.beta[u])), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(bb(s, 2 + u)), 0.0, 1e-12);
    }
}

TEST(PlusPDynamics, ZeroInteractionIsExactPerTrajectory) {
  auto model = trapped_ring(8, 0.0);
  const CMatrix h = model->single_particle_matrix();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
  const double t = 0.5;
  const CMatrix u = eig.eigenvectors() *
                    eig.eigenvalues().unaryExpr([&](double e) { return std::polar(1.0, -e * t); }).asDiagonal() *
                    eig.eigenvectors().adjoint();
  PlusPOptions opt;
  opt.scheme.dt = 0.01;
  const PlusPSystem sys(model, opt);
  CVector a0(8);
  for (int i = 0; i < 8; ++i) a0[i] = cplx(std::sin(i + 1.0), 0.2 * i);
  auto p = sample_plusp(InitialState::coherent(a0), PlusPSampling::canonical, NoiseStream(4, 0));
  const CVector alpha0 = p.alpha, beta0 = p.beta;
  for (int s = 0; s < 50; ++s) sys.step(p, s * 0.01, s, NoiseStream(4, 0));
  EXPECT_LT((p.alpha - u * alpha0).norm(), 1e-9);
  EXPECT_LT((p.beta - u.conjugate() * beta0).norm(), 1e-9);
}

TEST(PlusPDynamics, DeterministicLimitReproducesExactNumbers) {
  auto model = trapped_ring(8, 0.0);
  CVector a0(8);
  for (int i = 0; i < 8; ++i) a0[i] = cplx(1.0 + 0.1 * i, -0.3 * i);
  PlusPProblemSpec spec;
  spec.model = model;
  spec.initial = InitialState::coherent(a0);
  spec.sampling = PlusPSampling::delta;
  spec.observables = {"n[2]", "N"};
  EnsembleConfig cfg;
  cfg.trajectories = 4;
  cfg.dt = 0.01;
  cfg.times = {0.0, 0.5};
  const auto r = run_plusp(spec, cfg);
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(model->single_particle_matrix());
  const CMatrix u = eig.eigenvectors() *
                    eig.eigenvalues().unaryExpr([](double e) { return std::polar(1.0, -e * 0.5); }).asDiagonal() *
                    eig.eigenvectors().adjoint();
  const CVector exact = u * a0;
  EXPECT_NEAR(std::abs(r.mean(0, 1) - std::norm(exact[2])), 0.0, 1e-12 * std::norm(exact[2]));
  EXPECT_NEAR(std::abs(r.mean(1, 1) - a0.squaredNorm()), 0.0, 1e-12 * a0.squaredNorm());
}

TEST(PlusPDynamics, KerrConservesNumberAndFourthMoment) {
  PlusPProblemSpec spec;
  spec.model = single_cell(scalar(0.05));
  spec.initial = InitialState::coherent(field({3.0}));
  spec.observables = {"N", "moment[0,0|0,0]"};
  EnsembleConfig cfg;
  cfg.trajectories = 2000;
  cfg.dt = 5e-3;
  cfg.times = {0.0, 0.5, 1.0, 2.0};
  const auto r = run_plusp(spec, cfg);
  for (std::size_t k = 0; k < cfg.times.size(); ++k) {
    EXPECT_NEAR(r.mean(0, k).real(), 9.0, 4 * r.error(0, k).real() + 1e-12);
    EXPECT_NEAR(r.mean(1, k).real(), 81.0, 4 * r.error(1, k).real() + 1e-12);
    // Hermiticity proxy
    EXPECT_NEAR(r.mean(0, k).imag(), 0.0, 4 * r.error(0, k).imag() + 1e-12);
  }
}

TEST(PlusPDynamics, MatchesExactKerrEvolution) {
  // N = 100, chi = 1/N, tau = chi N t
  const double chi = 0.01, alpha = 10.0;
  PlusPProblemSpec spec;
  spec.model = single_cell(scalar(chi));
  spec.initial = InitialState::coherent(field({alpha}));
  spec.observables = {"X[0]", "Y[0]", "moment[|0,0]"};
  EnsembleConfig cfg;
  cfg.trajectories = 4000;
  cfg.dt = 1e-3;
  for (int k = 0; k <= 10; ++k) cfg.times.push_back(0.05 * k);
  const auto r = run_plusp(spec, cfg);
  int inside = 0, total = 0;
  for (std::size_t k = 0; k < cfg.times.size(); ++k) {
    const cplx a = fock_power_mean(alpha, chi, cfg.times[k], 1);
    const cplx a2 = fock_power_mean(alpha, chi, cfg.times[k], 2);
    auto within = [&](double value, double exact, double err) {
      ++total;
      inside += std::fabs(value - exact) <= 2 * err + 1e-12;
    };
    within(r.mean(0, k).real(), a.real(), r.error(0, k).real());
    within(r.mean(1, k).real(), a.imag(), r.error(1, k).real());
    within(r.mean(2, k).real(), a2.real(), r.error(2, k).real());
    within(r.mean(2, k).imag(), a2.imag(), r.error(2, k).imag());
    EXPECT_NEAR(r.mean(0, k).imag(), 0.0, 4 * r.error(0, k).imag() + 1e-12);
  }
  EXPECT_GE(inside, static_cast<int>(std::ceil(0.9 * total)));
}

TEST(PlusPDynamics, ItoReadingMatchesExactForBothSchemes) {
  PlusPProblemSpec spec;
  spec.model = single_cell(scalar(0.1));
  spec.initial = InitialState::coherent(field({3.0}));
  spec.observables = {"X[0]"};
  EnsembleConfig cfg;
  cfg.trajectories = 4000;
  cfg.dt = 2e-3;
  cfg.times = {1.0};
  spec.options.scheme.kind = SchemeKind::midpoint;
  const auto mid = run_plusp(spec, cfg);
  spec.options.scheme.kind = SchemeKind::euler;
  const auto euler = run_plusp(spec, cfg);
  const double exact = fock_power_mean(3.0, 0.1, 1.0, 1).real();
  EXPECT_NEAR(mid.mean(0, 0).real(), exact, 3 * mid.error(0, 0).real());
  EXPECT_NEAR(euler.mean(0, 0).real(), exact, 3 * euler.error(0, 0).real());
  // read as Stratonovich, the same equations carry an extra rotation exp(-i chi t / 2) of alpha
  spec.options.scheme.kind = SchemeKind::midpoint;
  spec.options.scheme.interpretation = Interpretation::stratonovich;
  spec.observables = {"a[0]"};
  const auto strat = run_plusp(spec, cfg);
  const cplx shifted = std::polar(1.0, -0.05) * fock_power_mean(3.0, 0.1, 1.0, 1);
  EXPECT_NEAR(strat.mean(0, 0).real(), shifted.real(), 3 * strat.error(0, 0).real());
  EXPECT_NEAR(strat.mean(0, 0).imag(), shifted.imag(), 3 * strat.error(0, 0).imag());
}

TEST(PlusPReversal, NoInteractionRecoversExactly) {
  PlusPProblemSpec spec;
  spec.model = trapped_ring(8, 0.0);
  spec.initial = InitialState::coherent(CVector::Constant(8, cplx(1.0, 0.0)));
  spec.sampling = PlusPSampling::delta;
  EnsembleConfig cfg;
  cfg.trajectories = 4;
  cfg.dt = 0.01;
  const auto r = time_reversal_test(spec, cfg, 0.5, 10, 3);
  EXPECT_LT(r.residual, 1e-9);
  EXPECT_TRUE(r.recovered || r.final_error == 0.0);
}

TEST(PlusPReversal, KerrReturnsWithGrowingSpread) {
  PlusPProblemSpec spec;
  spec.model = single_cell(scalar(0.01));
  spec.initial = InitialState::coherent(field({10.0}));
  EnsembleConfig cfg;
  cfg.trajectories = 4000;
  cfg.dt = 1e-3;
  const auto r = time_reversal_test(spec, cfg, 0.5, 10);
  EXPECT_FALSE(r.inconclusive);
  EXPECT_LE(r.residual, 2 * r.final_error);
  EXPECT_GT(r.final_spread, r.initial_spread);
  // the dephased state at tau_r is far from the start, so the return is not trivial
  EXPECT_LT(r.x_mean[5], 9.0);
  EXPECT_GT(r.x_error.back(), r.x_error[4]);
}

TEST(PlusPGaugeTest, ConstantGaugeLeavesObservablesUnchanged) {
  PlusPProblemSpec spec;
  spec.model = single_cell(scalar(0.05));
  spec.initial = InitialState::coherent(field({2.0}));
  spec.observables = {"X[0]", "n[0]", "weight"};
  EnsembleConfig cfg;
  cfg.trajectories = 4000;
  cfg.dt = 5e-3;
  cfg.times = {0.5, 1.0};
  const auto plain = run_plusp(spec, cfg);
  PlusPGauge gauge;
  gauge.function = [](double, const CVector&, const CVector&, CVector& g) {
    g.setZero();
    g[0] = cplx(0.3, 0.2);
    g[1] = cplx(-0.2, 0.1);
  };
  spec.options.gauge = gauge;
  const auto gauged = run_plusp(spec, cfg);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_NEAR(gauged.mean(2, k).real(), 1.0, 4 * gauged.error(2, k).real());
    for (std::size_t o = 0; o < 2; ++o) {
      const double combined = std::hypot(plain.error(o, k).real(), gauged.error(o, k).real());
      EXPECT_NEAR(gauged.mean(o, k).real(), plain.mean(o, k).real(), 2.5 * combined) << o << " " << k;
    }
  }
}

TEST(PlusPObservables, ParsingAndValidation) {
  PlusPProblemSpec spec;
  spec.model = single_cell(scalar(0.0));
  spec.initial = InitialState::coherent(field({1.0}));
  EnsembleConfig cfg;
  cfg.trajectories = 2;
  cfg.dt = 0.1;
  cfg.times = {0.1};
  spec.observables = {"moment[0|1]"};
  EXPECT_THROW(run_plusp(spec, cfg), InvalidInput);
  spec.observables = {"bogus"};
  EXPECT_THROW(run_plusp(spec, cfg), InvalidInput);
  spec.observables = {"moment[0|0]", "a[0]", "ad[0]", "Y[0]", "alpha2[0]", "N[0]"};
  spec.sampling = PlusPSampling::delta;
  const auto r = run_plusp(spec, cfg);
  EXPECT_NEAR(r.mean(0, 0).real(), 1.0, 1e-12);
  EXPECT_NEAR(r.mean(5, 0).real(), 1.0, 1e-12);
  spec.options.reversal_time = 0.05;
  cfg.dt = 0.1;
  EXPECT_THROW(run_plusp(spec, cfg), InvalidInput);
}
