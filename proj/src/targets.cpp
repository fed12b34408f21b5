#include "hmcsplit/targets.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace hmcsplit {

Target::Target(std::string name, std::size_t dim, Potential potential, Gradient gradient,
               std::vector<double> mass_diag, std::optional<std::vector<double>> frequencies,
               Sampler exact_sampler)
    : name_(std::move(name)),
      dim_(dim),
      potential_(std::move(potential)),
      gradient_(std::move(gradient)),
      mass_(std::move(mass_diag)),
      frequencies_(std::move(frequencies)),
      sampler_(std::move(exact_sampler)),
      counter_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
  if (dim_ == 0) throw std::invalid_argument("target dimension must be positive");
  if (mass_.size() != dim_) throw std::invalid_argument("mass_diag has the wrong length");
  for (double m : mass_) {
    if (!(m > 0.0 && std::isfinite(m))) throw std::invalid_argument("masses must be positive");
  }
  if (frequencies_ && frequencies_->size() != dim_) {
    throw std::invalid_argument("frequencies have the wrong length");
  }
}

void Target::sample_exact(Rng& rng, std::span<double> q, std::span<double> p) const {
  if (!sampler_) throw std::logic_error("target '" + name_ + "' has no exact sampler");
  sampler_(rng, q, p);
}

double Target::kinetic(std::span<const double> p) const {
  double k = 0.0;
  for (std::size_t j = 0; j < dim_; ++j) k += p[j] * p[j] / mass_[j];
  return 0.5 * k;
}

namespace {

Target quadratic(std::string name, std::vector<double> omegas) {
  const std::size_t d = omegas.size();
  auto stiffness = std::make_shared<std::vector<double>>(d);
  for (std::size_t j = 0; j < d; ++j) (*stiffness)[j] = omegas[j] * omegas[j];

  auto potential = [stiffness](std::span<const double> q) {
    double v = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) v += (*stiffness)[j] * q[j] * q[j];
    return 0.5 * v;
  };
  auto gradient = [stiffness](std::span<const double> q, std::span<double> out) {
    for (std::size_t j = 0; j < q.size(); ++j) out[j] = (*stiffness)[j] * q[j];
  };
  auto sampler = [w = omegas](Rng& rng, std::span<double> q, std::span<double> p) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      q[j] = rng.normal() / w[j];
      p[j] = rng.normal();
    }
  };
  return Target(std::move(name), d, potential, gradient, std::vector<double>(d, 1.0),
                std::move(omegas), sampler);
}

std::size_t parse_size(std::string_view digits, std::string_view text) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || value == 0) {
    throw std::invalid_argument("bad dimension in target '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

Target gaussian_chain(std::size_t d) {
  if (d == 0) throw std::invalid_argument("gaussian_chain: d must be >= 1");
  std::vector<double> omegas(d);
  for (std::size_t j = 0; j < d; ++j) omegas[j] = static_cast<double>(j + 1);
  return quadratic("chain:" + std::to_string(d), std::move(omegas));
}

Target double_well() {
  auto potential = [](std::span<const double> q) {
    const double x2 = q[0] * q[0];
    return x2 * x2 - x2;
  };
  auto gradient = [](std::span<const double> q, std::span<double> out) {
    out[0] = 4.0 * q[0] * q[0] * q[0] - 2.0 * q[0];
  };
  return Target("dwell", 1, potential, gradient, {1.0});
}

Target diagonal_gaussian(std::vector<double> omegas) {
  if (omegas.empty()) throw std::invalid_argument("diagonal_gaussian: no frequencies");
  std::string name = "diag:";
  for (std::size_t j = 0; j < omegas.size(); ++j) {
    if (!(omegas[j] > 0.0 && std::isfinite(omegas[j]))) {
      throw std::invalid_argument("diagonal_gaussian: frequency " + std::to_string(j) +
                                  " is not positive");
    }
    if (j) name += ",";
    std::string w = std::to_string(omegas[j]);
    w.erase(w.find_last_not_of('0') + 1);
    if (!w.empty() && w.back() == '.') w.pop_back();
    name += w;
  }
  return quadratic(std::move(name), std::move(omegas));
}

Target parse_target(std::string_view text) {
  const auto colon = text.find(':');
  const auto kind = text.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

  if (kind == "dwell" && colon == std::string_view::npos) return double_well();
  if (kind == "chain" && !arg.empty()) return gaussian_chain(parse_size(arg, text));
  if (kind == "gauss" && !arg.empty()) {
    return diagonal_gaussian(std::vector<double>(parse_size(arg, text), 1.0));
  }
  if (kind == "diag" && !arg.empty()) {
    std::vector<double> omegas;
    std::string_view rest = arg;
    while (true) {
      const auto comma = rest.find(',');
      const std::string item(rest.substr(0, comma));
      std::size_t used = 0;
      double w = 0.0;
      try {
        w = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != item.size()) {
        throw std::invalid_argument("bad frequency '" + item + "' in target '" +
                                    std::string(text) + "'");
      }
      omegas.push_back(w);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return diagonal_gaussian(std::move(omegas));
  }
  throw std::invalid_argument("unknown target '" + std::string(text) +
                              "' (expected chain:<d>, dwell, diag:<w1,...>, gauss:<d>)");
}

}  // namespace hmcsplit
