#pragma once

// Reference computations for the tests, written without the library's
// harmonic module.

#include <array>
#include <cmath>
#include <vector>

namespace oracle {

using Mat = std::array<double, 4>;  // row-major 2x2

inline Mat mul(const Mat& x, const Mat& y) {
  return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
          x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3]};
}

inline Mat identity() { return {1, 0, 0, 1}; }
inline Mat drift(double t) { return {1, t, 0, 1}; }
inline Mat kick(double t) { return {1, 0, -t, 1}; }

// One step on q'' = -q; drift_first tells whether coefficient 0 is a drift.
inline Mat step_matrix(const std::vector<double>& c, bool drift_first, double h) {
  Mat m = identity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const bool is_drift = (i % 2 == 0) == drift_first;
    m = mul(is_drift ? drift(c[i] * h) : kick(c[i] * h), m);
  }
  return m;
}

inline Mat power(const Mat& m, int n) {
  Mat r = identity();
  for (int i = 0; i < n; ++i) r = mul(m, r);
  return r;
}

inline double rho_verlet(double h) { return std::pow(h, 4) / (32.0 * (1.0 - h * h / 4.0)); }

// rho of the two-stage member (a, 1/2, 1 - 2a, 1/2, a), as a rational function of h.
inline double rho_two_stage(double a, double h) {
  const double h2 = h * h;
  const double b = 0.5 - a;
  const double num = h2 * h2 * std::pow(2 * a * a * b * h2 + 4 * a * a - 6 * a + 1, 2);
  const double den = 8 * (2 - a * h2) * (2 - b * h2) * (1 - a * b * h2);
  return num / den;
}

// k31 and k32 of the two-stage member.
inline double k31_two_stage(double a) { return (12 * a * a - 12 * a + 2) / 24; }
inline double k32_two_stage(double a) { return (-6 * a + 1) / 24; }

// Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.
template <class F>
double bisect(F f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace oracle
