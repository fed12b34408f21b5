#include <gtest/gtest.h>

#include <cmath>

#include "hmcsplit/harmonic.hpp"
#include "hmcsplit/optimize.hpp"
#include "hmcsplit/schemes.hpp"
#include "oracles.hpp"

using namespace hmcsplit;

namespace {

const OptimizationReport& two_stage() {
  static const auto r = optimize_two_stage(2.0);
  return r;
}
const OptimizationReport& three_stage() {
  static const auto r = optimize_three_stage();
  return r;
}
const OptimizationReport& four_stage() {
  static const auto r = optimize_four_stage();
  return r;
}

// max over (0, h_bar] of the closed-form two-stage rho, on a fine grid
double brute_norm_two_stage(double a, double h_bar) {
  double best = 0;
  for (int i = 1; i <= 4000; ++i) best = std::max(best, oracle::rho_two_stage(a, h_bar * i / 4000));
  return best;
}

double a_h(const SplittingScheme& s, double h) { return harmonic_update(s, h).a; }

void expect_double_root(const SplittingScheme& s, double h_hat) {
  EXPECT_LE(std::abs(a_h(s, h_hat) + 1), 1e-8);
  const double e = 1e-4;
  const double second = (a_h(s, h_hat + e) - 2 * a_h(s, h_hat) + a_h(s, h_hat - e)) / (e * e);
  EXPECT_GT(second, 0.0);
}

}  // namespace

TEST(Optimize, FamilyNames) {
  for (auto f : {Family::TwoStage, Family::ThreeStage, Family::FourStage}) {
    EXPECT_EQ(family_from_string(to_string(f)), f);
  }
  EXPECT_THROW(family_from_string("5stage"), std::invalid_argument);
}

TEST(Optimize, TwoStageMatchesBruteForce) {
  const auto& r = two_stage();
  ASSERT_EQ(r.argmin.size(), 1u);
  EXPECT_NEAR(r.argmin[0], 0.21178, 1e-3);
  double best_a = 0, best = INFINITY;
  for (double a = 0.205; a <= 0.218; a += 1e-5) {
    const double v = brute_norm_two_stage(a, 2.0);
    if (v < best) best = v, best_a = a;
  }
  EXPECT_NEAR(r.argmin[0], best_a, 5e-5);
  EXPECT_NEAR(r.rho_norm_at_min, best, 1e-3 * best);
}

TEST(Optimize, TwoStageBelowMinRho2) {
  const auto& r = two_stage();
  const double minrho2 = rho_norm(catalog("MINRHO2"), 2.0);
  EXPECT_LT(r.rho_norm_at_min, minrho2);
  // within a quarter of the quoted 5e-4
  EXPECT_NEAR(r.rho_norm_at_min, 5e-4, 0.25 * 5e-4);
  EXPECT_LT(r.rho_norm_at_min, rho_norm(make_two_stage(0.01), 2.0));
  EXPECT_LT(r.rho_norm_at_min, rho_norm(make_two_stage(0.49), 2.0));
}

TEST(Optimize, TwoStageSmallBarLimit) {
  // k31 + k32 = 0 has root (3 - sqrt 5)/4; for small h_bar rho ~ h^4 (k31 + k32)^2 / 2
  const auto r = optimize_two_stage(0.05);
  const double root = oracle::bisect(
      [](double a) { return oracle::k31_two_stage(a) + oracle::k32_two_stage(a); }, 0.1, 0.3);
  EXPECT_NEAR(root, (3 - std::sqrt(5.0)) / 4, 1e-14);
  EXPECT_NEAR(r.argmin[0], root, 1e-4);
  EXPECT_LT(std::abs(r.argmin[0] - 0.1932), std::abs(r.argmin[0] - 0.2118));
}

TEST(Optimize, TwoStageDomain) {
  EXPECT_THROW(optimize_two_stage(0.0), std::domain_error);
  EXPECT_THROW(optimize_two_stage(2.9), std::domain_error);
  EXPECT_THROW(optimize_two_stage(NAN), std::domain_error);
}

TEST(Optimize, SolveDoubleRoot) {
  const auto at3 = solve_double_root_three_stage(3.0);
  ASSERT_EQ(at3.size(), 1u);
  EXPECT_NEAR(at3[0].a1, 1.0 / 6, 1e-14);
  const auto at = solve_double_root_three_stage(2 * std::sqrt(2.0));
  ASSERT_EQ(at.size(), 2u);
  const auto near = solve_double_root_three_stage(2.9763246);
  bool found = false;
  for (const auto& c : near) {
    found |= std::abs(c.a1 - 0.118880) < 1e-5 && std::abs(c.b1 - 0.296195) < 1e-5;
  }
  EXPECT_TRUE(found);
  EXPECT_THROW(solve_double_root_three_stage(3.5), std::domain_error);
  EXPECT_THROW(solve_double_root_three_stage(0.0), std::domain_error);
}

TEST(Optimize, ThreeStageReproducesPublished) {
  const auto& r = three_stage();
  ASSERT_EQ(r.argmin.size(), 2u);
  EXPECT_NEAR(r.argmin[0], 0.11888010966548, 1e-6);
  EXPECT_NEAR(r.argmin[1], 0.29619504261126, 1e-6);
  EXPECT_NEAR(r.rho_norm_at_min, 7e-5, 0.5 * 7e-5);
  ASSERT_TRUE(r.double_root_location.has_value());
  EXPECT_NEAR(*r.double_root_location, 2.98, 0.01);
  ASSERT_TRUE(r.branch.has_value());
  const auto other = *r.branch == RootBranch::Plus ? RootBranch::Minus : RootBranch::Plus;
  const double h_hat = *r.double_root_location;
  EXPECT_GT(rho_norm(make_three_stage_from_hhat(h_hat, other), 3.0), r.rho_norm_at_min);
}

TEST(Optimize, ThreeStageBranchesOnGrid) {
  // the selected branch is never beaten by the other one at the optimum's neighbourhood
  const auto& r = three_stage();
  for (double hh = 2.90; hh <= 3.0; hh += 0.02) {
    const double sel = rho_norm(make_three_stage_from_hhat(hh, *r.branch), 3.0);
    EXPECT_GE(sel, r.rho_norm_at_min * (1 - 1e-9)) << hh;
  }
}

TEST(Optimize, FourStageReproducesPublished) {
  const auto& r = four_stage();
  ASSERT_EQ(r.argmin.size(), 3u);
  EXPECT_NEAR(r.argmin[0], 0.071353913450279725904, 1e-4);
  EXPECT_NEAR(r.argmin[1], 0.268548791161230105820, 1e-4);
  EXPECT_NEAR(r.argmin[2], 0.1916678, 1e-4);
  EXPECT_GE(r.rho_norm_at_min, 3.5e-7);
  EXPECT_LE(r.rho_norm_at_min, 1.4e-6);
  ASSERT_TRUE(r.double_root_location.has_value());
  EXPECT_NEAR(*r.double_root_location, 3.04, 0.02);
}

TEST(Optimize, FourStageUnpinnedIsNoWorse) {
  const auto free = optimize_four_stage({0.0, 4});
  EXPECT_LE(free.rho_norm_at_min, four_stage().rho_norm_at_min * (1 + 1e-9));
  EXPECT_NEAR(free.argmin[2], 0.1916678, 1e-3);
}

TEST(Optimize, ReportsRecomputeIndependently) {
  for (const auto* r : {&two_stage(), &three_stage(), &four_stage()}) {
    const double again = rho_norm(r->scheme, r->h_bar, {4096, 0.41});
    EXPECT_NEAR(r->rho_norm_at_min, again, 1e-8 * again) << to_string(r->family);
    EXPECT_FALSE(r->trace.empty());
  }
}

TEST(Optimize, DoubleRootPersists) {
  expect_double_root(three_stage().scheme, *three_stage().double_root_location);
  expect_double_root(four_stage().scheme, *four_stage().double_root_location);
}

TEST(Optimize, PerturbationDoesNotImprove) {
  for (const auto* r : {&two_stage(), &three_stage(), &four_stage()}) {
    for (std::size_t i = 0; i < r->argmin.size(); ++i) {
      for (double s : {-1e-3, 1e-3}) {
        auto x = r->argmin;
        x[i] += s;
        const auto scheme = x.size() == 1   ? make_two_stage(x[0])
                            : x.size() == 2 ? make_three_stage(x[0], x[1])
                                            : make_four_stage(x[0], x[1], x[2]);
        EXPECT_GE(rho_norm(scheme, r->h_bar), r->rho_norm_at_min - 1e-9)
            << to_string(r->family) << " " << i << " " << s;
      }
    }
  }
}

TEST(Optimize, ReportJson) {
  const nlohmann::json j = three_stage();
  EXPECT_EQ(j.at("family"), "3stage");
  EXPECT_TRUE(j.at("argmin").contains("a1"));
  EXPECT_TRUE(j.at("argmin").contains("b1"));
  EXPECT_EQ(j.at("scheme").get<SplittingScheme>(), three_stage().scheme);
  EXPECT_TRUE(j.at("branch") == "Plus" || j.at("branch") == "Minus");
  const nlohmann::json j2 = two_stage();
  EXPECT_TRUE(j2.at("double_root_location").is_null());
  EXPECT_FALSE(j2.contains("branch"));
}

TEST(Optimize, ErrorMetricMinimizers) {
  const double e = minimize_error_metric_two_stage(ErrorMetric::E);
  EXPECT_NEAR(e, 0.1932, 5e-4);
  const double estar = minimize_error_metric_two_stage(ErrorMetric::Estar);
  EXPECT_NEAR(estar, 0.1956, 5e-4);
  // both metrics are polynomials in a1; compare with the root of their derivative
  auto metric = [](double a, bool star) {
    const double k31 = oracle::k31_two_stage(a), k32 = oracle::k32_two_stage(a);
    return star ? k31 * k31 + std::pow(k31 + k32, 2) : k31 * k31 + k32 * k32;
  };
  auto deriv = [&](bool star) {
    return [&, star](double a) { return metric(a + 1e-7, star) - metric(a - 1e-7, star); };
  };
  EXPECT_NEAR(e, oracle::bisect(deriv(false), 0.1, 0.3), 1e-6);
  EXPECT_NEAR(estar, oracle::bisect(deriv(true), 0.1, 0.3), 1e-6);
  const auto k = two_stage_error_constants(e);
  EXPECT_GE(k.e_metric, 5e-5);
  EXPECT_LE(k.e_metric, 9e-5);
  EXPECT_GT(two_stage_error_constants(constants::min_rho2_a1()).e_metric, k.e_metric);
}

TEST(Optimize, LookupDerivedScheme) {
  const auto s = lookup_scheme("MCLACHLAN2_ESTAR");
  EXPECT_NEAR(s.coefficients()[0], minimize_error_metric_two_stage(ErrorMetric::Estar), 1e-15);
  EXPECT_EQ(lookup_scheme("VV"), catalog("VV"));
  EXPECT_THROW(lookup_scheme("MINRHO9"), std::invalid_argument);
  EXPECT_EQ(lookup_names().size(), catalog_names().size() + 1);
}
