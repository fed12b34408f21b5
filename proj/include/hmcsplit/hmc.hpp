#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hmcsplit/schemes.hpp"
#include "hmcsplit/targets.hpp"

namespace hmcsplit {

class NonFiniteStateError : public std::runtime_error {
public:
  NonFiniteStateError(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}
  // Zero-based index of the time-step that produced inf/NaN.
  long step() const { return step_; }

private:
  long step_;
};

// Position, momentum and, when known, the gradient at the position. Carrying
// the gradient lets a kick-first trajectory reuse the force computed at the
// end of the previous accepted one.
struct PhaseState {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> grad;
  bool grad_valid = false;
};

// Evaluates the gradient into state.grad if it is not already valid.
// Returns the number of evaluations spent (0 or 1).
int prepare_gradient(const Target& target, PhaseState& state);

// I time-steps of length h. Consecutive time-steps share their boundary
// substep, so each time-step costs exactly stage_count gradient evaluations
// provided the state's gradient is valid on entry. Returns the number of
// evaluations spent. Throws NonFiniteStateError.
long integrate(const SplittingScheme& scheme, const Target& target, double h, int steps,
               PhaseState& state);

// Convenience overload with a cold start.
long integrate(const SplittingScheme& scheme, const Target& target, double h, int steps,
               std::vector<double>& q, std::vector<double>& p);

struct HmcConfig {
  enum class Start { ExactStationary, GivenPoint };

  double h0 = 0.1;
  double jitter = 0.2;  // h = (1 + u) h0 with u ~ Uniform(-jitter, jitter)
  int steps_per_proposal = 1;
  long chain_length = 1000;
  long burn_in = 0;
  std::uint64_t seed = 0;
  Start start = Start::ExactStationary;
  std::vector<double> start_point;  // used with GivenPoint
  bool record = false;

  // Throws std::invalid_argument describing the first violated field.
  void validate() const;
};

struct StepRecord {
  double delta;  // +inf for a non-finite trajectory
  bool accepted;
  double h_used;
};

struct ChainSummary {
  long proposals = 0;
  long accepted = 0;
  double accepted_fraction = 0.0;
  // Moments of the energy error over proposals with a finite trajectory.
  double mean_energy_error = 0.0;
  double mean_squared_energy_error = 0.0;
  double energy_error_stderr = 0.0;  // naive, ignores autocorrelation
  long nonfinite = 0;
  std::uint64_t gradient_evaluations = 0;  // whole run, burn-in included
  std::vector<StepRecord> records;
};

ChainSummary hmc_run(const Target& target, const SplittingScheme& scheme,
                     const HmcConfig& config);

// sin^2(I theta_h) rho(h) for a unit oscillator started at stationarity.
// Throws InstabilityError.
double expected_energy_error_harmonic(const SplittingScheme& scheme, double h, int steps);

// Max over random phase points of |S Psi S Psi x - x|_inf / max(1, |x|_inf),
// S the momentum flip.
double reversibility_check(const SplittingScheme& scheme, const Target& target, double h,
                           int steps, int sample_count, std::uint64_t seed = 1);

// Max over random phase points of |Delta(q, p) + Delta(q*, -p*)|.
double energy_antisymmetry_check(const SplittingScheme& scheme, const Target& target, double h,
                                 int steps, int sample_count, std::uint64_t seed = 1);

// Max of |det Psi' - 1| over random phase points. Quadratic targets give an
// exactly linear map, whose matrix is assembled from the images of the unit
// vectors; other targets use central differences with step fd_step.
double volume_check(const SplittingScheme& scheme, const Target& target, double h, int steps,
                    int sample_count, double fd_step = 1e-5, std::uint64_t seed = 1);

}  // namespace hmcsplit
