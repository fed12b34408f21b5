#include "hmcsplit/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hmcsplit {

std::string_view to_string(LeadingKind kind) {
  return kind == LeadingKind::DriftFirst ? "DriftFirst" : "KickFirst";
}

LeadingKind leading_kind_from_string(std::string_view text) {
  if (text == "DriftFirst") return LeadingKind::DriftFirst;
  if (text == "KickFirst") return LeadingKind::KickFirst;
  throw std::invalid_argument("unknown leading_kind '" + std::string(text) +
                              "' (expected DriftFirst or KickFirst)");
}

SplittingScheme::SplittingScheme(LeadingKind leading_kind, std::vector<double> coefficients,
                                 std::string label)
    : leading_kind_(leading_kind), coefficients_(std::move(coefficients)), label_(std::move(label)) {
  const std::size_t n = coefficients_.size();
  if (n < 3 || n % 2 == 0) {
    throw std::invalid_argument("a splitting scheme needs 2r+1 coefficients with r >= 1, got " +
                                std::to_string(n));
  }
  stage_count_ = static_cast<int>((n - 1) / 2);

  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(coefficients_[i])) {
      throw std::invalid_argument("non-finite coefficient at index " + std::to_string(i));
    }
    if (coefficients_[i] != coefficients_[n - 1 - i]) {
      throw std::invalid_argument("coefficients are not a palindrome (index " + std::to_string(i) +
                                  ")");
    }
  }

  double drift_sum = 0.0;
  double kick_sum = 0.0;
  double drift_abs = 0.0;
  double kick_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool drift = kind_at(i) == FlowKind::Drift;
    (drift ? drift_sum : kick_sum) += coefficients_[i];
    (drift ? drift_abs : kick_abs) += std::abs(coefficients_[i]);
  }
  // scaled so that derived coefficients of large magnitude are not rejected for rounding
  if (std::abs(drift_sum - 1.0) > kConsistencyTolerance * std::max(1.0, drift_abs) ||
      std::abs(kick_sum - 1.0) > kConsistencyTolerance * std::max(1.0, kick_abs)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "inconsistent scheme: drift fractions sum to " << drift_sum
        << ", kick fractions sum to " << kick_sum;
    throw std::invalid_argument(msg.str());
  }
}

FlowKind SplittingScheme::kind_at(std::size_t i) const {
  const bool even = i % 2 == 0;
  if (leading_kind_ == LeadingKind::DriftFirst) return even ? FlowKind::Drift : FlowKind::Kick;
  return even ? FlowKind::Kick : FlowKind::Drift;
}

SplittingScheme SplittingScheme::mirrored() const {
  const auto other = leading_kind_ == LeadingKind::DriftFirst ? LeadingKind::KickFirst
                                                              : LeadingKind::DriftFirst;
  return {other, coefficients_, label_.empty() ? label_ : label_ + "_MIRRORED"};
}

SplittingScheme SplittingScheme::with_label(std::string label) const {
  return {leading_kind_, coefficients_, std::move(label)};
}

SplittingScheme make_two_stage(double a1) {
  return {LeadingKind::DriftFirst, {a1, 0.5, 1.0 - 2.0 * a1, 0.5, a1}};
}

SplittingScheme make_three_stage(double a1, double b1) {
  const double a2 = 0.5 - a1;
  const double b2 = 1.0 - 2.0 * b1;
  return {LeadingKind::DriftFirst, {a1, b1, a2, b2, a2, b1, a1}};
}

SplittingScheme make_four_stage(double a1, double a2, double b1) {
  const double b2 = 0.5 - b1;
  const double a3 = 1.0 - 2.0 * a1 - 2.0 * a2;
  return {LeadingKind::DriftFirst, {a1, b1, a2, b2, a3, b2, a2, b1, a1}};
}

ThreeStageCoefficients three_stage_double_root(double h_hat, RootBranch branch) {
  if (!(h_hat > 0.0 && h_hat <= 3.0)) {
    std::ostringstream msg;
    msg << "double-root location must satisfy 0 < h_hat <= 3, got " << h_hat;
    throw std::domain_error(msg.str());
  }
  const double h2 = h_hat * h_hat;
  const double sign = branch == RootBranch::Plus ? 1.0 : -1.0;
  const double root = sign * std::sqrt(9.0 - h2) / h2;
  return {0.5 - 3.0 / h2 + root, 3.0 / h2 + root};
}

SplittingScheme make_three_stage_from_hhat(double h_hat, RootBranch branch) {
  const auto c = three_stage_double_root(h_hat, branch);
  return make_three_stage(c.a1, c.b1);
}

SplittingScheme concatenate(const SplittingScheme& scheme, int times) {
  if (times < 1) throw std::invalid_argument("concatenate: times must be >= 1");
  if (times == 1) return scheme;

  const auto c = scheme.coefficients();
  const double scale = 1.0 / times;
  std::vector<double> out;
  out.reserve(times * (c.size() - 1) + 1);
  out.push_back(c.front() * scale);
  for (int k = 0; k < times; ++k) {
    for (std::size_t i = 1; i < c.size(); ++i) out.push_back(c[i] * scale);
    // the last letter of this copy and the first of the next act on the same flow
    if (k + 1 < times) out.back() += c.front() * scale;
  }
  std::string label = scheme.label().empty()
                          ? std::string{}
                          : scheme.label() + "x" + std::to_string(times);
  return {scheme.leading_kind(), std::move(out), std::move(label)};
}

namespace constants {
double min_rho2_a1() { return (3.0 - std::sqrt(3.0)) / 6.0; }
double yoshida4_a1() { return 0.5 / (2.0 - std::cbrt(2.0)); }
}  // namespace constants

namespace {

SplittingScheme yoshida4() {
  const double a1 = constants::yoshida4_a1();
  return make_three_stage(a1, 2.0 * a1);
}

}  // namespace

std::vector<std::string> catalog_names() {
  return {"VV", "PV", "MCLACHLAN2", "MINRHO2", "MINRHO3", "MINRHO4", "YOSHIDA4"};
}

SplittingScheme catalog(std::string_view name) {
  if (name == "VV") return {LeadingKind::KickFirst, {0.5, 1.0, 0.5}, "VV"};
  if (name == "PV") return {LeadingKind::DriftFirst, {0.5, 1.0, 0.5}, "PV"};
  if (name == "MCLACHLAN2") return make_two_stage(constants::kMinErrorA1).with_label("MCLACHLAN2");
  if (name == "MINRHO2") return make_two_stage(constants::min_rho2_a1()).with_label("MINRHO2");
  if (name == "MINRHO3") {
    return make_three_stage(constants::kMinRho3A1, constants::kMinRho3B1).with_label("MINRHO3");
  }
  if (name == "MINRHO4") {
    return make_four_stage(constants::kMinRho4A1, constants::kMinRho4A2, constants::kMinRho4B1)
        .with_label("MINRHO4");
  }
  if (name == "YOSHIDA4") return yoshida4().with_label("YOSHIDA4");

  std::string msg = "unknown scheme '" + std::string(name) + "'; available:";
  for (const auto& n : catalog_names()) msg += " " + n;
  throw std::invalid_argument(msg);
}

void to_json(nlohmann::json& j, const SplittingScheme& scheme) {
  j = nlohmann::json{
      {"label", scheme.label()},
      {"leading_kind", std::string(to_string(scheme.leading_kind()))},
      {"stage_count", scheme.stage_count()},
      {"coefficients", std::vector<double>(scheme.coefficients().begin(),
                                           scheme.coefficients().end())},
  };
}

SplittingScheme scheme_from_json(const nlohmann::json& j) {
  SplittingScheme scheme(leading_kind_from_string(j.at("leading_kind").get<std::string>()),
                         j.at("coefficients").get<std::vector<double>>(),
                         j.value("label", std::string{}));
  if (j.contains("stage_count") && j.at("stage_count").get<int>() != scheme.stage_count()) {
    throw std::invalid_argument("stage_count does not match the number of coefficients");
  }
  return scheme;
}

}  // namespace hmcsplit
