#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hmcsplit/schemes.hpp"

namespace hmcsplit {

enum class Family { TwoStage, ThreeStage, FourStage };

std::string_view to_string(Family family);  // "2stage", "3stage", "4stage"
Family family_from_string(std::string_view text);

struct TraceEntry {
  std::vector<double> iterate;
  double objective;
};

struct OptimizationReport {
  Family family;
  SplittingScheme scheme;
  // Free coefficients of the family: {a1}, {a1, b1} or {a1, a2, b1}.
  std::vector<std::string> parameter_names;
  std::vector<double> argmin;
  double rho_norm_at_min;
  double h_bar;
  std::optional<double> double_root_location;
  std::optional<RootBranch> branch;
  std::vector<TraceEntry> trace;
};

void to_json(nlohmann::json& j, const OptimizationReport& report);

// The one-dimensional objective has several local minima inside the bracket.
class BracketError : public std::runtime_error {
public:
  BracketError(const std::string& what, std::vector<double> local_minima)
      : std::runtime_error(what), local_minima_(std::move(local_minima)) {}
  const std::vector<double>& local_minima() const { return local_minima_; }

private:
  std::vector<double> local_minima_;
};

// Every start of a multi-start search failed.
class OptimizationFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Minimizes ||rho||_(h_bar) over a1 in (0, 1/2). Requires 0 < h_bar < 2 sqrt 2.
OptimizationReport optimize_two_stage(double h_bar);

// Three-stage coefficients with A = -1, B + C = 0 at h_hat: one pair at
// h_hat = 3, two pairs (Plus, Minus) otherwise. Throws std::domain_error
// outside (0, 3].
std::vector<ThreeStageCoefficients> solve_double_root_three_stage(double h_hat);

// Minimizes ||rho||_(3) over the double-root location and both branches.
OptimizationReport optimize_three_stage();

struct FourStageOptions {
  // The double-root location is reported on a grid of this spacing, with b1
  // re-optimized there. Zero keeps the unconstrained two-dimensional optimum.
  double h_hat_resolution = 1e-3;
  // Number of best seeds handed to the simplex search.
  int simplex_starts = 4;
};

// a1, a2 solve B = C = 0 at h_hat for given b1; ||rho||_(4) is then minimized
// over (b1, h_hat).
OptimizationReport optimize_four_stage(FourStageOptions options = {});

enum class ErrorMetric { E, Estar };

// argmin over a1 of k31^2 + k32^2 (E) or k31^2 + (k31 + k32)^2 (Estar).
double minimize_error_metric_two_stage(ErrorMetric metric);

// Catalog entries plus the schemes derived here (MCLACHLAN2_ESTAR).
SplittingScheme lookup_scheme(std::string_view name);
std::vector<std::string> lookup_names();

}  // namespace hmcsplit
