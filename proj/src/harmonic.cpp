#include "hmcsplit/harmonic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/minima.hpp>

namespace hmcsplit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Both off-diagonal entries below this mark a removable singularity of
// theta/chi/rho (a = +-1 with b = c = 0).
constexpr long double kRemovableOffDiagonal = 1e-6L;

// Offsets used to fill removable singularities by continuation.
constexpr std::array<double, 3> kContinuationSteps = {1e-3, 5e-4, 2.5e-4};

struct Matrix2 {
  long double a = 1, b = 0, c = 0, d = 1;
};

// Accumulated in extended precision: b + c and b * c cancel badly in double
// for small h.
Matrix2 update_ld(const SplittingScheme& scheme, double h) {
  Matrix2 m;
  const auto coeffs = scheme.coefficients();
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const long double t = static_cast<long double>(coeffs[i]) * h;
    if (scheme.kind_at(i) == FlowKind::Drift) {
      // [[1, t], [0, 1]] * m
      m.a += t * m.c;
      m.b += t * m.d;
    } else {
      // [[1, 0], [-t, 1]] * m
      m.c -= t * m.a;
      m.d -= t * m.b;
    }
  }
  return m;
}

enum class PointKind { Regular, Removable, Unstable };

PointKind classify(const Matrix2& m) {
  if (std::fabs(m.a) > 1.0L + kStabilityTolerance) return PointKind::Unstable;
  if (std::fabs(m.b) < kRemovableOffDiagonal && std::fabs(m.c) < kRemovableOffDiagonal) {
    return PointKind::Removable;
  }
  // a = +-1 with one nonzero off-diagonal entry is a Jordan block: powers grow.
  if (-m.b * m.c <= 0.0L) return PointKind::Unstable;
  return PointKind::Regular;
}

struct Angles {
  double theta;
  double chi;
  double rho;
};

Angles regular_angles(const Matrix2& m) {
  // 1 - a^2 = -b c by unit determinant; the product form keeps its accuracy
  // as a -> +-1.
  const long double sin2 = -m.b * m.c;
  const long double s = std::copysign(std::sqrt(sin2), m.b);
  const long double theta = std::atan2(s, m.a);
  const long double chi = m.b / s;
  const long double sum = m.b + m.c;
  const long double rho = sum * sum / (2.0L * sin2);
  return {static_cast<double>(theta), static_cast<double>(chi), static_cast<double>(rho)};
}

// One-sided (or two-sided when both sides are stable) limits of chi and rho
// at h, Richardson-extrapolated over kContinuationSteps.
HarmonicDiagnostics continued_diagnostics(const SplittingScheme& scheme, double h,
                                          const Matrix2& at_h) {
  std::array<double, 3> chi_values{};
  std::array<double, 3> rho_values{};
  for (std::size_t k = 0; k < kContinuationSteps.size(); ++k) {
    const double eps = kContinuationSteps[k];
    double chi_sum = 0.0;
    double rho_sum = 0.0;
    int used = 0;
    for (const double side : {-1.0, 1.0}) {
      const double hs = h + side * eps;
      if (hs <= 0.0) continue;
      const Matrix2 m = update_ld(scheme, hs);
      if (classify(m) != PointKind::Regular) continue;
      const Angles g = regular_angles(m);
      chi_sum += g.chi;
      rho_sum += g.rho;
      ++used;
    }
    if (used == 0) return {h, false, kNaN, kNaN, kNaN, false};
    chi_values[k] = chi_sum / used;
    rho_values[k] = rho_sum / used;
  }
  // Eliminates the O(eps) and O(eps^2) terms for offsets eps, eps/2, eps/4.
  auto extrapolate = [](const std::array<double, 3>& v) {
    return v[0] / 3.0 - 2.0 * v[1] + 8.0 * v[2] / 3.0;
  };
  const double theta = at_h.a > 0 ? 0.0 : M_PI;
  return {h, true, theta, extrapolate(chi_values), std::max(0.0, extrapolate(rho_values)), true};
}

}  // namespace

HarmonicUpdate harmonic_update(const SplittingScheme& scheme, double h) {
  const Matrix2 m = update_ld(scheme, h);
  return {h, static_cast<double>(m.a), static_cast<double>(m.b), static_cast<double>(m.c),
          static_cast<double>(m.d)};
}

HarmonicDiagnostics diagnostics(const SplittingScheme& scheme, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    std::ostringstream msg;
    msg << "diagnostics require a positive finite step, got " << h;
    throw std::domain_error(msg.str());
  }
  const Matrix2 m = update_ld(scheme, h);
  switch (classify(m)) {
    case PointKind::Unstable:
      return {h, false, kNaN, kNaN, kNaN, false};
    case PointKind::Removable:
      return continued_diagnostics(scheme, h, m);
    case PointKind::Regular:
      break;
  }
  const Angles g = regular_angles(m);
  return {h, true, g.theta, g.chi, g.rho, false};
}

double rho(const SplittingScheme& scheme, double h) {
  const auto diag = diagnostics(scheme, h);
  return diag.stable ? diag.rho : kInf;
}

double rho_closed_form_two_stage(double a1_in, double h_in) {
  const long double a1 = a1_in;
  const long double h = h_in;
  const long double h2 = h * h;
  const long double a2 = 0.5L - a1;
  const long double den = 8.0L * (2.0L - a1 * h2) * (2.0L - a2 * h2) * (1.0L - a1 * a2 * h2);
  if (!(den > 0.0L)) {
    std::ostringstream msg;
    msg << "two-stage scheme with a1 = " << a1_in << " is unstable at h = " << h_in;
    throw InstabilityError(msg.str(), h_in);
  }
  const long double inner = 2.0L * a1 * a1 * a2 * h2 + 4.0L * a1 * a1 - 6.0L * a1 + 1.0L;
  return static_cast<double>(h2 * h2 * inner * inner / den);
}

RhoNorm rho_norm_detail(const SplittingScheme& scheme, double h_bar, RhoNormOptions options) {
  if (!(h_bar > 0.0)) throw std::domain_error("rho_norm requires h_bar > 0");
  const int n = std::max(options.grid_points, 16);
  const double spacing = h_bar / n;
  const double offset = std::clamp(options.grid_offset, 0.0, 1.0);

  std::vector<double> hs;
  hs.reserve(n + 1);
  for (int i = 0; i < n; ++i) {
    const double h = (i + offset) * spacing;
    if (h > 0.0) hs.push_back(h);
  }
  hs.push_back(h_bar);

  std::vector<double> values(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    values[i] = rho(scheme, hs[i]);
    if (!std::isfinite(values[i])) return {kInf, hs[i]};
  }

  RhoNorm best{values.back(), hs.back()};
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (values[i] > best.value) best = {values[i], hs[i]};
  }

  const auto last = hs.size() - 1;
  for (std::size_t i = 1; i < last; ++i) {
    if (!(values[i] >= values[i - 1] && values[i] >= values[i + 1])) continue;
    const auto [h_max, neg_rho] = boost::math::tools::brent_find_minima(
        [&](double h) {
          const double r = rho(scheme, h);
          return std::isfinite(r) ? -r : -kInf;
        },
        hs[i - 1], hs[i + 1], std::numeric_limits<double>::digits / 2);
    if (-neg_rho > best.value) best = {-neg_rho, h_max};
  }
  return best;
}

double rho_norm(const SplittingScheme& scheme, double h_bar, RhoNormOptions options) {
  return rho_norm_detail(scheme, h_bar, options).value;
}

double stability_interval(const SplittingScheme& scheme) {
  const int r = scheme.stage_count();
  const double h_end = 2.0 * r + 1.0;
  const double step = 1e-3 * h_end;
  const int n = static_cast<int>(std::lround(h_end / step));

  auto stable = [&](double h) { return classify(update_ld(scheme, h)) != PointKind::Unstable; };
  auto a_at = [&](double h) { return static_cast<double>(update_ld(scheme, h).a); };

  // First unstable step in (lo, hi], given lo stable and hi unstable.
  auto bisect = [&](double lo, double hi) {
    while (hi - lo > 1e-10) {
      const double mid = 0.5 * (lo + hi);
      (stable(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  // Between grid points a_h can leave [-1, 1] only around a local extremum
  // narrower than the grid; locate the extremum and test it.
  auto hidden_excursion = [&](double lo, double hi, bool minimum) -> double {
    const auto [h_ext, value] = boost::math::tools::brent_find_minima(
        [&](double h) { return minimum ? a_at(h) : -a_at(h); }, lo, hi,
        std::numeric_limits<double>::digits / 2);
    const double a_ext = minimum ? value : -value;
    if (std::fabs(a_ext) > 1.0 + kStabilityTolerance) return bisect(lo, h_ext);
    return -1.0;
  };

  double a_prev2 = 1.0;
  double a_prev = 1.0;
  for (int i = 1; i <= n; ++i) {
    const double h = i * step;
    const Matrix2 m = update_ld(scheme, h);
    if (classify(m) == PointKind::Unstable) {
      if (i >= 2) {
        // a dip/bump that crossed and came back between the previous grid points
        const double lo = (i - 2) * step;
        if (a_prev < a_prev2 && a_prev <= static_cast<double>(m.a)) {
          if (const double hit = hidden_excursion(lo, h, true); hit >= 0.0) return hit;
        }
      }
      return bisect((i - 1) * step, h);
    }
    const double a = static_cast<double>(m.a);
    if (i >= 2) {
      const double lo = (i - 2) * step;
      const bool local_min = a_prev < a_prev2 && a_prev <= a;
      const bool local_max = a_prev > a_prev2 && a_prev >= a;
      if (local_min || local_max) {
        if (const double hit = hidden_excursion(lo, h, local_min); hit >= 0.0) return hit;
      }
    }
    a_prev2 = a_prev;
    a_prev = a;
  }
  return h_end;
}

ErrorConstants two_stage_error_constants(double a1) {
  const double k31 = (12.0 * a1 * a1 - 12.0 * a1 + 2.0) / 24.0;
  const double k32 = (-6.0 * a1 + 1.0) / 24.0;
  return {k31, k32, k31 * k31 + k32 * k32, k31 * k31 + (k31 + k32) * (k31 + k32)};
}

ErrorConstants error_constants(const SplittingScheme& scheme) {
  // theta_h = h (1 + t2 h^2 + ...), chi_h = 1 + c2 h^2 + ...; only even
  // powers appear, so extrapolation runs in h^2 with ratio 4.
  constexpr int kLevels = 7;
  constexpr double kH0 = 0.2;
  std::array<long double, kLevels> theta_terms{};
  std::array<long double, kLevels> chi_terms{};
  for (int k = 0; k < kLevels; ++k) {
    const double h = std::ldexp(kH0, -k);
    const Matrix2 m = update_ld(scheme, h);
    if (classify(m) != PointKind::Regular) {
      throw ExtrapolationError("scheme is not stable on the extrapolation sequence");
    }
    const long double sin2 = -m.b * m.c;
    const long double s = std::copysign(std::sqrt(sin2), m.b);
    const long double theta = std::atan2(s, m.a);
    const long double chi = m.b / s;
    const long double h2 = static_cast<long double>(h) * h;
    theta_terms[k] = (theta / h - 1.0L) / h2;
    chi_terms[k] = (chi - 1.0L) / h2;
  }

  // Neville-style table; column j removes the h^(2j) error term.
  constexpr int kOrder = 4;
  auto richardson = [](std::array<long double, kLevels> t) {
    std::array<long double, kLevels> prev = t;
    long double estimate_prev = t[kLevels - 2];
    for (int j = 1; j <= kOrder; ++j) {
      const long double factor = std::pow(4.0L, j);
      for (int k = kLevels - 1; k >= j; --k) {
        t[k] = t[k] + (t[k] - prev[k - 1]) / (factor - 1.0L);
      }
      estimate_prev = t[kLevels - 2];
      prev = t;
    }
    return std::pair{static_cast<double>(t[kLevels - 1]),
                     static_cast<double>(std::fabs(t[kLevels - 1] - estimate_prev))};
  };

  const auto [t2, t_err] = richardson(theta_terms);
  const auto [c2, c_err] = richardson(chi_terms);
  constexpr double kSettled = 1e-10;
  if (!(t_err < kSettled && c_err < kSettled) || !std::isfinite(t2) || !std::isfinite(c2)) {
    std::ostringstream msg;
    msg << "error-constant extrapolation did not settle (theta residual " << t_err
        << ", chi residual " << c_err << ")";
    throw ExtrapolationError(msg.str());
  }

  // For A = p^2/2, B = q^2/2: {A,A,B} = p^2 and {B,A,B} = -q^2, so matching
  // theta/(2h) (chi p^2 + q^2/chi) term by term gives:
  const double k31 = 0.5 * (t2 + c2);
  const double k32 = 0.5 * (c2 - t2);
  return {k31, k32, k31 * k31 + k32 * k32, k31 * k31 + (k31 + k32) * (k31 + k32)};
}

double rho_bound_multivariate(const SplittingScheme& scheme, double h,
                              std::span<const double> omegas) {
  double total = 0.0;
  for (std::size_t j = 0; j < omegas.size(); ++j) {
    const double step = omegas[j] * h;
    const auto diag = diagnostics(scheme, step);
    if (!diag.stable) {
      std::ostringstream msg;
      msg << "frequency index " << j << " (omega = " << omegas[j] << ") is unstable at h = " << h;
      throw InstabilityError(msg.str(), h, static_cast<std::ptrdiff_t>(j));
    }
    total += diag.rho;
  }
  return total;
}

}  // namespace hmcsplit
