#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hmcsplit/schemes.hpp"

namespace hmcsplit {

// Runs body(0..count-1) on up to `threads` workers (0 = hardware
// concurrency). Results must be written by index; exceptions are rethrown
// on the calling thread (first by index).
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

// Step-size and trajectory-length rule for one scheme in a dimension sweep:
// h0 = h_factor / d, I = max(1, round(steps_factor * d)).
struct SchemeRule {
  std::string label;
  SplittingScheme scheme;
  double h_factor;
  double steps_factor;

  double h0(std::size_t d) const { return h_factor / static_cast<double>(d); }
  int steps(std::size_t d) const;
  // Gradient evaluations per proposal.
  long work(std::size_t d) const { return static_cast<long>(scheme.stage_count()) * steps(d); }
};

struct ExperimentPlan {
  std::string name;
  std::vector<SchemeRule> rules;
  std::vector<std::size_t> dims;  // chain:<d> targets
  int replicas = 1;
  long chain_length = 1000;
  double jitter = 0.2;
  std::uint64_t seed = 0;
  bool equal_work = true;

  // Throws std::invalid_argument when equal_work is set and the work per
  // proposal of two rules differs by more than the larger stage count.
  void check() const;
};

struct SweepRow {
  std::size_t d;
  std::string label;
  std::string scheme;
  double h0;
  int steps;
  int replicas;
  double acceptance;          // mean over replicas
  double acceptance_stderr;   // across replicas (0 for a single replica)
  double mean_delta;          // mean over replicas
  double mean_delta_stderr;   // across replicas, or within the chain for one replica
  std::uint64_t gradient_evaluations;  // summed over replicas
};

// Replica r of rule k at dims[i] uses seed derive_seed(plan.seed, (i * rules + k) * 4096 + r),
// so rows do not depend on scheduling.
std::vector<SweepRow> run_sweep(const ExperimentPlan& plan, unsigned threads);

// Equal-work audit over rows sharing d: gradient evaluations per replica
// differ by at most the largest stage count times the chain length.
bool equal_work_audit(const std::vector<SweepRow>& rows, const ExperimentPlan& plan);

std::vector<std::size_t> powers_of_two(std::size_t max_d, std::size_t min_d = 1);

// Plans behind the reproduction commands.
ExperimentPlan fig2_plan(std::size_t max_d, long chain_length, std::uint64_t seed);
ExperimentPlan fig45_plan(std::size_t max_d, long chain_length, int replicas, std::uint64_t seed);

// integral of rho_VV(z) over (0, 1).
double verlet_rho_integral();

struct BenchRow {
  std::string label;
  std::string scheme;
  double h;
  int steps;
  int replicas;
  double mu;
  double sigma;
};

// Double-well acceptance over replica chains at equal work.
std::vector<BenchRow> bench_double_well(int replicas, long chain_length, std::uint64_t seed,
                                        unsigned threads, double verlet_step = 0.3);

}  // namespace hmcsplit
