#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hmcsplit/random.hpp"

namespace hmcsplit {

// Target density pi(q) ~ exp(-V(q)) with a diagonal mass matrix.
class Target {
public:
  using Potential = std::function<double(std::span<const double>)>;
  using Gradient = std::function<void(std::span<const double>, std::span<double>)>;
  // Draws (q, p) from the stationary distribution exp(-H).
  using Sampler = std::function<void(Rng&, std::span<double>, std::span<double>)>;

  Target(std::string name, std::size_t dim, Potential potential, Gradient gradient,
         std::vector<double> mass_diag, std::optional<std::vector<double>> frequencies = {},
         Sampler exact_sampler = {});

  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }
  const std::vector<double>& mass_diag() const { return mass_; }
  const std::optional<std::vector<double>>& frequencies() const { return frequencies_; }
  bool has_exact_sampler() const { return static_cast<bool>(sampler_); }

  double potential(std::span<const double> q) const { return potential_(q); }

  // Counted: every call adds one to gradient_evaluations().
  void gradient(std::span<const double> q, std::span<double> out) const {
    counter_->fetch_add(1, std::memory_order_relaxed);
    gradient_(q, out);
  }

  // Throws std::logic_error when the target has no exact sampler.
  void sample_exact(Rng& rng, std::span<double> q, std::span<double> p) const;

  double kinetic(std::span<const double> p) const;
  double hamiltonian(std::span<const double> q, std::span<const double> p) const {
    return potential(q) + kinetic(p);
  }

  // Total over all copies of this target, from any thread.
  std::uint64_t gradient_evaluations() const {
    return counter_->load(std::memory_order_relaxed);
  }

private:
  std::string name_;
  std::size_t dim_;
  Potential potential_;
  Gradient gradient_;
  std::vector<double> mass_;
  std::optional<std::vector<double>> frequencies_;
  Sampler sampler_;
  std::shared_ptr<std::atomic<std::uint64_t>> counter_;
};

// V = (1/2) sum_j j^2 q_j^2, j = 1..d.
Target gaussian_chain(std::size_t d);

// V = q^4 - q^2 in one dimension.
Target double_well();

// V = (1/2) sum_j omega_j^2 q_j^2. Throws std::invalid_argument on a
// non-positive or non-finite frequency.
Target diagonal_gaussian(std::vector<double> omegas);

// "chain:<d>", "dwell", "diag:<w1,w2,...>", "gauss:<d>" (d unit frequencies).
Target parse_target(std::string_view text);

}  // namespace hmcsplit
