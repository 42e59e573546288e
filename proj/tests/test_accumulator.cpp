#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qdyn/accumulator.hpp"

using namespace qdyn;

TEST(ExactSum, CancelsCatastrophicTerms) {
  ExactSum s;
  s.add(1e300);
  s.add(1.0);
  s.add(-1e300);
  s.add(1e-300);
  EXPECT_EQ(s.value(), 1.0);
  ExactSum t;
  t.add(0.1);
  t.add(0.2);
  t.add(-0.3);
  EXPECT_EQ(t.value(), std::ldexp(1.0, -55));  // exact sum of the three doubles
}

TEST(ExactSum, HandlesSubnormalsAndSigns) {
  ExactSum s;
  const double tiny = std::ldexp(1.0, -1074);
  for (int i = 0; i < 6; ++i) s.add(tiny);
  s.add(-2.0 * tiny);
  EXPECT_EQ(s.value(), 4.0 * tiny);
  ExactSum n;
  n.add(-3.5);
  n.add(1.25);
  EXPECT_EQ(n.value(), -2.25);
}

TEST(ExactSum, OrderDoesNotMatter) {
  std::mt19937_64 gen(5);
  std::lognormal_distribution<double> mag(0.0, 20.0);
  std::vector<double> x(2000);
  for (auto& v : x) v = (gen() & 1 ? -1.0 : 1.0) * mag(gen);
  ExactSum a, b;
  for (double v : x) a.add(v);
  std::shuffle(x.begin(), x.end(), gen);
  for (double v : x) b.add(v);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(a.value(), b.value());
}

TEST(ExactSum, NonFiniteInputPropagates) {
  ExactSum s;
  s.add(1.0);
  s.add(std::numeric_limits<double>::infinity());
  EXPECT_TRUE(std::isinf(s.value()));
}

TEST(MomentAccumulator, ConstantObservableHasZeroError) {
  MomentAccumulator acc;
  for (int i = 0; i < 100; ++i) acc.add(1.0);
  EXPECT_EQ(acc.mean(), cplx(1.0));
  EXPECT_EQ(acc.error(), cplx(0.0));
}

TEST(MomentAccumulator, ErrorIsStandardErrorOfMean) {
  std::vector<cplx> x = {{1, 2}, {3, -1}, {-2, 0.5}, {0.5, 0.5}, {4, 1}};
  MomentAccumulator acc;
  for (auto v : x) acc.add(v);
  const double n = x.size();
  cplx mean = 0;
  for (auto v : x) mean += v;
  mean /= n;
  double vr = 0, vi = 0;
  for (auto v : x) {
    vr += std::pow(v.real() - mean.real(), 2);
    vi += std::pow(v.imag() - mean.imag(), 2);
  }
  EXPECT_NEAR(std::abs(acc.mean() - mean), 0.0, 1e-15);
  EXPECT_NEAR(acc.error().real(), std::sqrt(vr / (n - 1) / n), 1e-14);
  EXPECT_NEAR(acc.error().imag(), std::sqrt(vi / (n - 1) / n), 1e-14);
}

TEST(MomentAccumulator, WeightedMean) {
  MomentAccumulator acc;
  acc.add(1.0, 3.0);
  acc.add(5.0, 1.0);
  EXPECT_NEAR(acc.mean().real(), 2.0, 1e-15);
  EXPECT_EQ(acc.weight_sum(), 4.0);
}

TEST(MomentAccumulator, MergeIsAssociativeAndLossFree) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> g(0.0, 1e3);
  for (int trial = 0; trial < 20; ++trial) {
    MomentAccumulator a, b, c, all;
    for (int i = 0; i < 50; ++i) {
      const cplx v{g(gen), g(gen)};
      const double w = std::exp(g(gen) * 1e-3);
      (i % 3 == 0 ? a : i % 3 == 1 ? b : c).add(v, w);
      all.add(v, w);
    }
    MomentAccumulator left = a, right = b;
    left.merge(b);
    left.merge(c);
    right.merge(c);
    MomentAccumulator right_total = a;
    right_total.merge(right);
    EXPECT_TRUE(left == right_total);
    EXPECT_TRUE(left == all);
    EXPECT_EQ(left.mean(), all.mean());
    EXPECT_EQ(left.error(), all.error());
  }
}
