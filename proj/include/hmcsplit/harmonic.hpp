#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmcsplit/schemes.hpp"

// Exact analysis of a splitting scheme applied to the standard harmonic
// oscillator H = (p^2 + q^2)/2, where one time-step is the 2x2 matrix
//
//   [q']   [a  b] [q]
//   [p'] = [c  d] [p]
//
// and, for stable steps, a = cos(theta), b = chi sin(theta), c = -sin(theta)/chi.

namespace hmcsplit {

// Thrown when a quantity is requested at a step-size the scheme cannot take.
class InstabilityError : public std::domain_error {
public:
  InstabilityError(const std::string& what, double h, std::ptrdiff_t index = -1)
      : std::domain_error(what), h_(h), index_(index) {}
  double step() const { return h_; }
  // Position of the offending frequency for multivariate queries, -1 otherwise.
  std::ptrdiff_t index() const { return index_; }

private:
  double h_;
  std::ptrdiff_t index_;
};

class ExtrapolationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct HarmonicUpdate {
  double h;
  double a;
  double b;
  double c;
  double d;

  double determinant() const { return a * d - b * c; }
};

struct HarmonicDiagnostics {
  double h;
  bool stable;
  double theta;  // NaN when unstable
  double chi;    // NaN when unstable
  double rho;    // NaN when unstable
  // theta/chi/rho were filled by continuation across a removable singularity
  bool continued;
};

struct ErrorConstants {
  double k31;
  double k32;
  double e_metric;      // k31^2 + k32^2
  double estar_metric;  // k31^2 + (k31 + k32)^2
};

// |a_h| may exceed one by this much and still count as stable: published
// double-root coefficients are rounded, which turns an exact touch of -1
// into a dip of order 1e-14.
inline constexpr double kStabilityTolerance = 1e-12;

HarmonicUpdate harmonic_update(const SplittingScheme& scheme, double h);

// Requires h > 0 (std::domain_error otherwise).
HarmonicDiagnostics diagnostics(const SplittingScheme& scheme, double h);

// rho(h), or +infinity when h is unstable.
double rho(const SplittingScheme& scheme, double h);

// Closed form of rho for make_two_stage(a1). Throws InstabilityError when
// the denominator is not positive.
double rho_closed_form_two_stage(double a1, double h);

struct RhoNormOptions {
  int grid_points = 2048;
  // Shift of the grid as a fraction of its spacing, in [0, 1).
  double grid_offset = 0.0;
};

struct RhoNorm {
  double value;   // +infinity if any sampled step is unstable
  double argmax;  // step-size achieving the value
};

// max of rho over (0, h_bar], sampled on a uniform grid and refined by
// golden-section search around every local maximum.
RhoNorm rho_norm_detail(const SplittingScheme& scheme, double h_bar, RhoNormOptions options = {});
double rho_norm(const SplittingScheme& scheme, double h_bar, RhoNormOptions options = {});

// Right end of the largest interval (0, h_max) of stable step-sizes.
// Touching |a_h| = 1 without crossing (double roots) does not end it.
double stability_interval(const SplittingScheme& scheme);

// Leading modified-Hamiltonian coefficients, from Richardson extrapolation
// of theta_h and chi_h as h -> 0. Throws ExtrapolationError when the
// extrapolated sequence does not settle.
ErrorConstants error_constants(const SplittingScheme& scheme);

// Closed forms of k31, k32 over the two-stage family.
ErrorConstants two_stage_error_constants(double a1);

// sum_j rho(omega_j h). Throws InstabilityError naming the first unstable
// frequency.
double rho_bound_multivariate(const SplittingScheme& scheme, double h,
                              std::span<const double> omegas);

}  // namespace hmcsplit
