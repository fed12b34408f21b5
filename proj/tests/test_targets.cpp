#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "hmcsplit/random.hpp"
#include "hmcsplit/targets.hpp"

using namespace hmcsplit;

TEST(Random, Deterministic) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_NE(a.bits(), c.bits());
}

TEST(Random, NormalMoments) {
  Rng r(7);
  const int n = 200000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x, s2 += x * x, s4 += x * x * x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
  EXPECT_NEAR(s4 / n, 3.0, 0.06);
}

TEST(Random, DeriveSeedSplitMix) {
  // splitmix64 reference output for state 0 after one increment
  EXPECT_EQ(derive_seed(0, 0), 0xe220a8397b1dcdafULL);
  EXPECT_NE(derive_seed(1, 0), derive_seed(0, 1));
  EXPECT_NE(derive_seed(5, 3), derive_seed(5, 4));
}

TEST(Targets, ChainPotentialAndGradient) {
  const auto t = gaussian_chain(3);
  EXPECT_EQ(t.name(), "chain:3");
  EXPECT_EQ(t.dim(), 3u);
  ASSERT_TRUE(t.frequencies().has_value());
  EXPECT_EQ(*t.frequencies(), (std::vector<double>{1, 2, 3}));
  const std::vector<double> q{1.0, -0.5, 2.0};
  EXPECT_DOUBLE_EQ(t.potential(q), 0.5 * (1 + 4 * 0.25 + 9 * 4));
  std::vector<double> g(3);
  t.gradient(q, g);
  EXPECT_EQ(g, (std::vector<double>{1.0, -2.0, 18.0}));
  EXPECT_EQ(t.gradient_evaluations(), 1u);
  const std::vector<double> p{1, 1, 1};
  EXPECT_DOUBLE_EQ(t.hamiltonian(q, p), t.potential(q) + 1.5);
}

TEST(Targets, DoubleWell) {
  const auto t = double_well();
  EXPECT_EQ(t.dim(), 1u);
  EXPECT_FALSE(t.has_exact_sampler());
  EXPECT_FALSE(t.frequencies().has_value());
  const std::vector<double> q{std::sqrt(0.5)};
  EXPECT_NEAR(t.potential(q), -0.25, 1e-15);
  std::vector<double> g(1);
  t.gradient(q, g);
  EXPECT_NEAR(g[0], 0.0, 1e-15);
  Rng r(1);
  std::vector<double> qq(1), pp(1);
  EXPECT_THROW(t.sample_exact(r, qq, pp), std::logic_error);
}

TEST(Targets, GradientMatchesFiniteDifference) {
  for (const auto& t : {gaussian_chain(4), double_well(), diagonal_gaussian({0.5, 3})}) {
    std::vector<double> q(t.dim());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = 0.3 + 0.2 * static_cast<double>(i);
    std::vector<double> g(t.dim());
    t.gradient(q, g);
    for (std::size_t i = 0; i < q.size(); ++i) {
      auto qp = q, qm = q;
      qp[i] += 1e-6;
      qm[i] -= 1e-6;
      EXPECT_NEAR(g[i], (t.potential(qp) - t.potential(qm)) / 2e-6, 1e-6) << t.name();
    }
  }
}

TEST(Targets, ExactSamplerMoments) {
  const auto t = gaussian_chain(3);
  Rng r(3);
  const int n = 100000;
  std::vector<double> q(3), p(3), sq(3, 0.0), sp(3, 0.0);
  for (int i = 0; i < n; ++i) {
    t.sample_exact(r, q, p);
    for (int j = 0; j < 3; ++j) sq[j] += q[j] * q[j], sp[j] += p[j] * p[j];
  }
  for (int j = 0; j < 3; ++j) {
    const double w = j + 1;
    EXPECT_NEAR(sq[j] / n * w * w, 1.0, 0.02);
    EXPECT_NEAR(sp[j] / n, 1.0, 0.02);
  }
}

TEST(Targets, CounterSharedAcrossCopiesAndThreads) {
  const auto t = gaussian_chain(2);
  const auto copy = t;
  std::vector<std::thread> pool;
  for (int k = 0; k < 4; ++k) {
    pool.emplace_back([&copy] {
      std::vector<double> q{1, 1}, g(2);
      for (int i = 0; i < 1000; ++i) copy.gradient(q, g);
    });
  }
  for (auto& th : pool) th.join();
  EXPECT_EQ(t.gradient_evaluations(), 4000u);
  // a fresh target starts at zero
  EXPECT_EQ(gaussian_chain(2).gradient_evaluations(), 0u);
}

TEST(Targets, Parse) {
  EXPECT_EQ(parse_target("chain:16").dim(), 16u);
  EXPECT_EQ(parse_target("dwell").name(), "dwell");
  EXPECT_EQ(*parse_target("gauss:3").frequencies(), (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(*parse_target("diag:1,2.5,4").frequencies(), (std::vector<double>{1, 2.5, 4}));
  for (const char* bad : {"chain:", "chain:0", "chain:x", "diag:1,-2", "diag:", "blob", "gauss:-1"}) {
    EXPECT_THROW(parse_target(bad), std::invalid_argument) << bad;
  }
}

TEST(Targets, ConstructorValidation) {
  auto pot = [](std::span<const double>) { return 0.0; };
  auto grad = [](std::span<const double>, std::span<double>) {};
  EXPECT_THROW(Target("x", 0, pot, grad, {}), std::invalid_argument);
  EXPECT_THROW(Target("x", 2, pot, grad, {1.0}), std::invalid_argument);
  EXPECT_THROW(Target("x", 1, pot, grad, {0.0}), std::invalid_argument);
  EXPECT_THROW(Target("x", 1, pot, grad, {1.0}, std::vector<double>{1, 2}), std::invalid_argument);
  EXPECT_THROW(diagonal_gaussian({1.0, NAN}), std::invalid_argument);
}
