#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "hmcsplit/experiments.hpp"
#include "oracles.hpp"

using namespace hmcsplit;

TEST(Experiments, ParallelForVisitsEveryIndex) {
  std::vector<std::atomic<int>> hits(257);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Experiments, ParallelForRethrowsLowestIndex) {
  try {
    parallel_for(64, 4, [](std::size_t i) {
      if (i == 9 || i == 40) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "9");
  }
}

TEST(Experiments, PowersOfTwo) {
  EXPECT_EQ(powers_of_two(16), (std::vector<std::size_t>{1, 2, 4, 8, 16}));
  EXPECT_EQ(powers_of_two(20, 4), (std::vector<std::size_t>{4, 8, 16}));
}

TEST(Experiments, RuleSteps) {
  const SchemeRule r{"x", catalog("MINRHO4"), 4.0, 0.5};
  EXPECT_EQ(r.steps(1), 1);
  EXPECT_EQ(r.steps(2), 1);
  EXPECT_EQ(r.steps(64), 32);
  EXPECT_DOUBLE_EQ(r.h0(64), 4.0 / 64);
  EXPECT_EQ(r.work(64), 128);
}

TEST(Experiments, Fig45PlanIsEqualWork) {
  const auto plan = fig45_plan(1024, 100, 2, 1);
  EXPECT_NO_THROW(plan.check());
  for (std::size_t d : plan.dims) {
    const long w = plan.rules.front().work(d);
    for (const auto& r : plan.rules) EXPECT_LE(std::abs(r.work(d) - w), 4) << r.label << " " << d;
  }
  EXPECT_EQ(plan.dims.back(), 1024u);
}

TEST(Experiments, UnequalWorkRejected) {
  auto plan = fig45_plan(64, 100, 1, 1);
  plan.rules.front().steps_factor = 5.0;
  EXPECT_THROW(plan.check(), std::invalid_argument);
  plan.equal_work = false;
  EXPECT_NO_THROW(plan.check());
  plan.replicas = 0;
  EXPECT_THROW(plan.check(), std::invalid_argument);
}

TEST(Experiments, SweepIndependentOfThreads) {
  const auto plan = fig45_plan(16, 200, 2, 7);
  const auto a = run_sweep(plan, 1);
  const auto b = run_sweep(plan, 4);
  ASSERT_EQ(a.size(), plan.dims.size() * plan.rules.size());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].label, b[i].label);
    EXPECT_EQ(a[i].acceptance, b[i].acceptance);
    EXPECT_EQ(a[i].mean_delta, b[i].mean_delta);
    EXPECT_EQ(a[i].gradient_evaluations, b[i].gradient_evaluations);
  }
  EXPECT_TRUE(equal_work_audit(a, plan));
}

TEST(Experiments, AuditCatchesImbalance) {
  const auto plan = fig45_plan(8, 50, 1, 3);
  auto rows = run_sweep(plan, 2);
  auto& big = *std::max_element(rows.begin(), rows.end(),
                                [](const SweepRow& a, const SweepRow& b) { return a.d < b.d; });
  big.gradient_evaluations *= 3;
  EXPECT_FALSE(equal_work_audit(rows, plan));
}

TEST(Experiments, VerletRhoIntegral) {
  double s = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) s += oracle::rho_verlet((i + 0.5) / n) / n;
  EXPECT_NEAR(verlet_rho_integral(), s, 1e-10);
}

TEST(Experiments, BenchShape) {
  const auto rows = bench_double_well(3, 200, 11, 2);
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.replicas, 3);
    EXPECT_GE(r.mu, 0.0);
    EXPECT_LE(r.mu, 1.0);
    EXPECT_GE(r.sigma, 0.0);
  }
  // equal work: h r and I r are shared by the first five rows
  for (std::size_t i = 1; i < 5; ++i) {
    const auto s = catalog(rows[i].scheme);
    EXPECT_NEAR(rows[i].h / s.stage_count(), rows[0].h, 1e-12);
    EXPECT_EQ(rows[i].steps * s.stage_count(), rows[0].steps);
  }
}
