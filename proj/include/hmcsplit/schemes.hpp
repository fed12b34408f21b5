#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace hmcsplit {

// Which partial flow a palindromic sequence starts with. A drift is the
// kinetic flow q <- q + t M^-1 p, a kick the potential flow p <- p - t grad V(q).
enum class LeadingKind { DriftFirst, KickFirst };

enum class FlowKind { Drift, Kick };

std::string_view to_string(LeadingKind kind);
LeadingKind leading_kind_from_string(std::string_view text);

// A palindromic splitting integrator: 2r+1 step-size fractions alternating
// between the two flows, starting with `leading_kind`. Immutable once built;
// the constructor enforces the palindrome, alternation length, and that the
// drift and kick fractions each add up to one.
class SplittingScheme {
public:
  static constexpr double kConsistencyTolerance = 1e-14;

  SplittingScheme(LeadingKind leading_kind, std::vector<double> coefficients,
                  std::string label = {});

  LeadingKind leading_kind() const { return leading_kind_; }
  std::span<const double> coefficients() const { return coefficients_; }
  int stage_count() const { return stage_count_; }
  const std::string& label() const { return label_; }

  // Flow applied by the i-th coefficient.
  FlowKind kind_at(std::size_t i) const;

  // Same coefficients with drifts and kicks exchanged.
  SplittingScheme mirrored() const;

  SplittingScheme with_label(std::string label) const;

  friend bool operator==(const SplittingScheme&, const SplittingScheme&) = default;

private:
  LeadingKind leading_kind_;
  std::vector<double> coefficients_;
  int stage_count_;
  std::string label_;
};

// (a1, 1/2, 1 - 2 a1, 1/2, a1)
SplittingScheme make_two_stage(double a1);

// (a1, b1, 1/2 - a1, 1 - 2 b1, 1/2 - a1, b1, a1)
SplittingScheme make_three_stage(double a1, double b1);

// (a1, b1, a2, 1/2 - b1, 1 - 2 a1 - 2 a2, 1/2 - b1, a2, b1, a1)
SplittingScheme make_four_stage(double a1, double a2, double b1);

// Sign taken in front of the square root when building a three-stage scheme
// from the location of the double root of A_h = -1.
enum class RootBranch { Plus, Minus };

struct ThreeStageCoefficients {
  double a1;
  double b1;
  friend bool operator==(const ThreeStageCoefficients&, const ThreeStageCoefficients&) = default;
};

// Closed-form member of the three-stage family with a double root of
// A_h = -1 at h_hat. Throws std::domain_error unless 0 < h_hat <= 3.
ThreeStageCoefficients three_stage_double_root(double h_hat, RootBranch branch);

SplittingScheme make_three_stage_from_hhat(double h_hat, RootBranch branch);

// `times` substeps of length h/times fused into one scheme of stage count
// times * r.
SplittingScheme concatenate(const SplittingScheme& scheme, int times);

namespace constants {
inline constexpr double kMinRho3A1 = 0.11888010966548;
inline constexpr double kMinRho3B1 = 0.29619504261126;
inline constexpr double kMinRho4A1 = 0.071353913450279725904;
inline constexpr double kMinRho4A2 = 0.268548791161230105820;
inline constexpr double kMinRho4B1 = 0.191667800000000000000;
// Real root of 48 a^3 - 72 a^2 + 38 a - 5 = 0, the minimizer of
// k31^2 + k32^2 over the two-stage family.
inline constexpr double kMinErrorA1 = 0.19318332750378357;
double min_rho2_a1();  // (3 - sqrt 3) / 6
double yoshida4_a1();  // 1 / (2 (2 - 2^(1/3)))
}  // namespace constants

// Named methods: VV, PV, MCLACHLAN2, MINRHO2, MINRHO3, MINRHO4, YOSHIDA4.
// Throws std::invalid_argument listing the available names.
SplittingScheme catalog(std::string_view name);
std::vector<std::string> catalog_names();

void to_json(nlohmann::json& j, const SplittingScheme& scheme);
SplittingScheme scheme_from_json(const nlohmann::json& j);

}  // namespace hmcsplit

namespace nlohmann {
template <>
struct adl_serializer<hmcsplit::SplittingScheme> {
  static hmcsplit::SplittingScheme from_json(const json& j) {
    return hmcsplit::scheme_from_json(j);
  }
  static void to_json(json& j, const hmcsplit::SplittingScheme& s) { hmcsplit::to_json(j, s); }
};
}  // namespace nlohmann
