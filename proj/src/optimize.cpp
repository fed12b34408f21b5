#include "hmcsplit/optimize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_multimin.h>

#include "hmcsplit/harmonic.hpp"

namespace hmcsplit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBrentBits = std::numeric_limits<double>::digits / 2;

template <class F>
double golden(F&& f, double lo, double hi) {
  std::uintmax_t iterations = 200;
  return boost::math::tools::brent_find_minima(f, lo, hi, kBrentBits, iterations).first;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

// Indices of strict discrete local minima among finite samples.
std::vector<std::size_t> local_minima(const std::vector<double>& values) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) continue;
    const double left = i > 0 ? values[i - 1] : kInf;
    const double right = i + 1 < values.size() ? values[i + 1] : kInf;
    if (values[i] < left && values[i] <= right) out.push_back(i);
  }
  return out;
}

// ---- four-stage double root ------------------------------------------------

using Pair = std::array<double, 2>;

Pair off_diagonal(double a1, double a2, double b1, double h) {
  const auto u = harmonic_update(make_four_stage(a1, a2, b1), h);
  return {u.b, u.c};
}

double max_abs(const Pair& p) { return std::max(std::abs(p[0]), std::abs(p[1])); }

// Damped Newton on B_h = C_h = 0 in (a1, a2) with b1 and h held fixed. B and
// C vanish together with A = +-1; only A = -1 is accepted. Imposing A = -1
// directly is ill-posed: A + 1 vanishes to second order at a double root.
std::optional<Pair> solve_four_stage_root(double b1, double h, Pair x) {
  constexpr double kBound = 2.0;
  constexpr double kFdStep = 1e-7;
  for (int it = 0; it < 80; ++it) {
    const Pair g = off_diagonal(x[0], x[1], b1, h);
    const double g0 = max_abs(g);
    if (g0 < 1e-15) break;
    double jac[2][2];
    for (int j = 0; j < 2; ++j) {
      Pair xp = x, xm = x;
      xp[j] += kFdStep;
      xm[j] -= kFdStep;
      const Pair gp = off_diagonal(xp[0], xp[1], b1, h);
      const Pair gm = off_diagonal(xm[0], xm[1], b1, h);
      jac[0][j] = (gp[0] - gm[0]) / (2 * kFdStep);
      jac[1][j] = (gp[1] - gm[1]) / (2 * kFdStep);
    }
    const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if (!(std::abs(det) > 1e-300)) return std::nullopt;
    const Pair step{-(jac[1][1] * g[0] - jac[0][1] * g[1]) / det,
                    -(-jac[1][0] * g[0] + jac[0][0] * g[1]) / det};
    double lambda = 1.0;
    Pair next{};
    for (; lambda > 1e-6; lambda /= 2) {
      next = {x[0] + lambda * step[0], x[1] + lambda * step[1]};
      if (std::abs(next[0]) > kBound || std::abs(next[1]) > kBound) continue;
      if (max_abs(off_diagonal(next[0], next[1], b1, h)) < g0) break;
    }
    if (lambda <= 1e-6) return std::nullopt;
    x = next;
  }
  if (max_abs(off_diagonal(x[0], x[1], b1, h)) > 1e-12) return std::nullopt;
  if (harmonic_update(make_four_stage(x[0], x[1], b1), h).a > 0) return std::nullopt;
  return x;
}

struct FourStagePoint {
  double b1;
  double h_hat;
  Pair a;
  double rho;  // +inf when infeasible

  auto key() const { return std::make_tuple(rho, a[0], a[1], b1); }
};

FourStagePoint evaluate_four_stage(double b1, double h_hat, const Pair& start) {
  FourStagePoint p{b1, h_hat, start, kInf};
  if (!(h_hat > 0.0 && h_hat < 4.0)) return p;
  const auto root = solve_four_stage_root(b1, h_hat, start);
  if (!root) return p;
  p.a = *root;
  p.rho = rho_norm(make_four_stage(p.a[0], p.a[1], b1), 4.0);
  return p;
}

struct SimplexContext {
  Pair start;
  std::vector<TraceEntry>* trace;
};

constexpr double kPenalty = 50.0;

double simplex_objective(const gsl_vector* v, void* params) {
  auto* ctx = static_cast<SimplexContext*>(params);
  const double b1 = gsl_vector_get(v, 0);
  const double h_hat = gsl_vector_get(v, 1);
  const auto p = evaluate_four_stage(b1, h_hat, ctx->start);
  ctx->trace->push_back({{p.a[0], p.a[1], b1, h_hat}, p.rho});
  return std::isfinite(p.rho) && p.rho > 0 ? std::log(p.rho) : kPenalty;
}

FourStagePoint simplex_search(const FourStagePoint& seed, std::vector<TraceEntry>& trace) {
  SimplexContext ctx{seed.a, &trace};
  gsl_multimin_function fn{&simplex_objective, 2, &ctx};
  gsl_vector* x = gsl_vector_alloc(2);
  gsl_vector* step = gsl_vector_alloc(2);
  gsl_vector_set(x, 0, seed.b1);
  gsl_vector_set(x, 1, seed.h_hat);
  gsl_vector_set_all(step, 0.02);
  gsl_multimin_fminimizer* nm =
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_multimin_fminimizer_set(nm, &fn, x, step);
  for (int it = 0; it < 3000; ++it) {
    if (gsl_multimin_fminimizer_iterate(nm) != 0) break;
    if (gsl_multimin_fminimizer_size(nm) < 1e-12) break;
  }
  const double b1 = gsl_vector_get(nm->x, 0);
  const double h_hat = gsl_vector_get(nm->x, 1);
  gsl_multimin_fminimizer_free(nm);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return evaluate_four_stage(b1, h_hat, seed.a);
}

// b1 re-optimized with the double root pinned at h_hat.
FourStagePoint pin_double_root(const FourStagePoint& near, double h_hat,
                               std::vector<TraceEntry>& trace) {
  // the valley runs diagonally, d(h_hat)/d(b1) ~ 1
  const double shift = h_hat - near.h_hat;
  const double centre = near.b1 + shift;
  const double half = 4.0 * std::abs(shift) + 1e-3;
  auto f = [&](double b1) {
    const auto p = evaluate_four_stage(b1, h_hat, near.a);
    trace.push_back({{p.a[0], p.a[1], b1, h_hat}, p.rho});
    return std::isfinite(p.rho) ? std::log(p.rho) : kPenalty;
  };
  const double b1 = golden(f, centre - half, centre + half);
  return evaluate_four_stage(b1, h_hat, near.a);
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::TwoStage: return "2stage";
    case Family::ThreeStage: return "3stage";
    case Family::FourStage: return "4stage";
  }
  return "?";
}

Family family_from_string(std::string_view text) {
  if (text == "2stage") return Family::TwoStage;
  if (text == "3stage") return Family::ThreeStage;
  if (text == "4stage") return Family::FourStage;
  throw std::invalid_argument("unknown family '" + std::string(text) +
                              "' (expected 2stage, 3stage or 4stage)");
}

void to_json(nlohmann::json& j, const OptimizationReport& report) {
  nlohmann::json argmin = nlohmann::json::object();
  for (std::size_t i = 0; i < report.argmin.size(); ++i) {
    argmin[report.parameter_names[i]] = report.argmin[i];
  }
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : report.trace) {
    trace.push_back({{"iterate", t.iterate},
                     {"objective", std::isfinite(t.objective) ? nlohmann::json(t.objective)
                                                              : nlohmann::json(nullptr)}});
  }
  j = nlohmann::json{{"family", std::string(to_string(report.family))},
                     {"argmin", argmin},
                     {"scheme", report.scheme},
                     {"rho_norm_at_min", report.rho_norm_at_min},
                     {"h_bar", report.h_bar},
                     {"double_root_location", report.double_root_location
                                                  ? nlohmann::json(*report.double_root_location)
                                                  : nlohmann::json(nullptr)},
                     {"trace", trace}};
  if (report.branch) j["branch"] = *report.branch == RootBranch::Plus ? "Plus" : "Minus";
}

OptimizationReport optimize_two_stage(double h_bar) {
  const double ceiling = 2.0 * std::sqrt(2.0);
  if (!(h_bar > 0.0 && h_bar < ceiling)) {
    throw std::domain_error("optimize_two_stage: h_bar must lie in (0, 2 sqrt 2), got " +
                            fmt(h_bar));
  }
  OptimizationReport report{Family::TwoStage, make_two_stage(0.25), {"a1"}, {}, 0.0,
                            h_bar, std::nullopt, std::nullopt, {}};
  auto objective = [&](double a1) {
    const double value = rho_norm(make_two_stage(a1), h_bar);
    report.trace.push_back({{a1}, value});
    return value;
  };

  constexpr int kScan = 200;
  const double lo = 0.0, hi = 0.5;
  std::vector<double> grid(kScan), values(kScan);
  for (int i = 0; i < kScan; ++i) {
    grid[i] = lo + (hi - lo) * (i + 0.5) / kScan;
    values[i] = objective(grid[i]);
  }
  const auto minima = local_minima(values);
  if (minima.size() != 1) {
    std::vector<double> where;
    for (auto i : minima) where.push_back(grid[i]);
    std::string msg = "optimize_two_stage: objective is not unimodal on (0, 1/2); local minima at";
    for (double w : where) msg += " " + fmt(w);
    if (where.empty()) msg += " none (no stable member)";
    throw BracketError(msg, std::move(where));
  }
  const std::size_t i = minima.front();
  const double left = i > 0 ? grid[i - 1] : lo;
  const double right = i + 1 < grid.size() ? grid[i + 1] : hi;
  const double a1 = golden([&](double a) { return objective(a); }, left, right);

  report.scheme = make_two_stage(a1);
  report.argmin = {a1};
  report.rho_norm_at_min = rho_norm(report.scheme, h_bar);
  return report;
}

std::vector<ThreeStageCoefficients> solve_double_root_three_stage(double h_hat) {
  std::vector<ThreeStageCoefficients> out{three_stage_double_root(h_hat, RootBranch::Plus)};
  if (h_hat < 3.0) out.push_back(three_stage_double_root(h_hat, RootBranch::Minus));
  for (const auto& c : out) {
    const auto u = harmonic_update(make_three_stage(c.a1, c.b1), h_hat);
    if (std::abs(u.a + 1.0) > 1e-12 || std::abs(u.b + u.c) > 1e-12) {
      throw std::runtime_error("three-stage double root residual too large at h_hat = " +
                               fmt(h_hat));
    }
  }
  return out;
}

OptimizationReport optimize_three_stage() {
  constexpr double kHBar = 3.0;
  OptimizationReport report{Family::ThreeStage, make_three_stage(1.0 / 6, 1.0 / 3),
                            {"a1", "b1"}, {}, 0.0, kHBar, std::nullopt, std::nullopt, {}};
  auto objective = [&](double h_hat, RootBranch branch) {
    const auto c = three_stage_double_root(h_hat, branch);
    const double value = rho_norm(make_three_stage(c.a1, c.b1), kHBar);
    report.trace.push_back({{c.a1, c.b1, h_hat}, value});
    return value;
  };

  constexpr int kScan = 600;
  struct Best {
    double value = kInf;
    int index = -1;
    RootBranch branch = RootBranch::Plus;
  } best;
  for (RootBranch branch : {RootBranch::Plus, RootBranch::Minus}) {
    for (int i = 1; i <= kScan; ++i) {
      const double v = objective(3.0 * i / kScan, branch);
      if (v < best.value) best = {v, i, branch};
    }
  }
  if (best.index < 0) throw OptimizationFailure("optimize_three_stage: no stable member found");

  const double left = 3.0 * (best.index - 1) / kScan;
  const double right = 3.0 * std::min(best.index + 1, kScan) / kScan;
  const double h_hat = golden(
      [&](double h) { return h > 0.0 ? objective(std::min(h, 3.0), best.branch) : kInf; },
      std::max(left, 1e-9), right);

  const auto c = three_stage_double_root(h_hat, best.branch);
  report.scheme = make_three_stage(c.a1, c.b1);
  report.argmin = {c.a1, c.b1};
  report.rho_norm_at_min = rho_norm(report.scheme, kHBar);
  report.double_root_location = h_hat;
  report.branch = best.branch;
  return report;
}

OptimizationReport optimize_four_stage(FourStageOptions options) {
  constexpr double kHBar = 4.0;
  OptimizationReport report{Family::FourStage, make_four_stage(0.125, 0.25, 0.25),
                            {"a1", "a2", "b1"}, {}, 0.0, kHBar, std::nullopt, std::nullopt, {}};

  // Seeds: double-root location on {2.8, ..., 3.3} times eight b1 starts.
  std::vector<FourStagePoint> seeds;
  for (int ih = 0; ih <= 5; ++ih) {
    const double h_hat = 2.8 + 0.1 * ih;
    for (int k = 0; k < 8; ++k) {
      const double b1 = 0.10 + 0.04 * k;
      const auto p = evaluate_four_stage(b1, h_hat, {0.1, 0.3});
      report.trace.push_back({{p.a[0], p.a[1], b1, h_hat}, p.rho});
      if (std::isfinite(p.rho)) seeds.push_back(p);
    }
  }
  if (seeds.empty()) {
    throw OptimizationFailure("optimize_four_stage: Newton failed from every start");
  }
  std::sort(seeds.begin(), seeds.end(),
            [](const auto& x, const auto& y) { return x.key() < y.key(); });

  FourStagePoint best{0, 0, {0, 0}, kInf};
  const std::size_t starts =
      std::min<std::size_t>(seeds.size(), static_cast<std::size_t>(std::max(1, options.simplex_starts)));
  for (std::size_t s = 0; s < starts; ++s) {
    const auto p = simplex_search(seeds[s], report.trace);
    if (p.key() < best.key()) best = p;
  }
  if (!std::isfinite(best.rho)) {
    throw OptimizationFailure("optimize_four_stage: simplex search found no stable scheme");
  }

  if (options.h_hat_resolution > 0.0) {
    const double res = options.h_hat_resolution;
    const double below = std::floor(best.h_hat / res) * res;
    FourStagePoint pinned{0, 0, {0, 0}, kInf};
    for (double h_hat : {below, below + res}) {
      const auto p = pin_double_root(best, h_hat, report.trace);
      if (p.key() < pinned.key()) pinned = p;
    }
    if (!std::isfinite(pinned.rho)) {
      throw OptimizationFailure("optimize_four_stage: no stable scheme on the h_hat grid");
    }
    best = pinned;
  }

  report.scheme = make_four_stage(best.a[0], best.a[1], best.b1);
  report.argmin = {best.a[0], best.a[1], best.b1};
  report.rho_norm_at_min = rho_norm(report.scheme, kHBar);
  report.double_root_location = best.h_hat;
  return report;
}

double minimize_error_metric_two_stage(ErrorMetric metric) {
  auto f = [metric](double a1) {
    const auto k = two_stage_error_constants(a1);
    return metric == ErrorMetric::E ? k.e_metric : k.estar_metric;
  };
  std::uintmax_t iterations = 200;
  return boost::math::tools::brent_find_minima(f, 0.0, 0.5, std::numeric_limits<double>::digits,
                                               iterations)
      .first;
}

std::vector<std::string> lookup_names() {
  auto names = catalog_names();
  names.push_back("MCLACHLAN2_ESTAR");
  return names;
}

SplittingScheme lookup_scheme(std::string_view name) {
  if (name == "MCLACHLAN2_ESTAR") {
    return make_two_stage(minimize_error_metric_two_stage(ErrorMetric::Estar))
        .with_label("MCLACHLAN2_ESTAR");
  }
  try {
    return catalog(name);
  } catch (const std::invalid_argument&) {
    std::string msg = "unknown scheme '" + std::string(name) + "'; available:";
    for (const auto& n : lookup_names()) msg += " " + n;
    throw std::invalid_argument(msg);
  }
}

}  // namespace hmcsplit
