#include "hmcsplit/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hmcsplit/harmonic.hpp"
#include "hmcsplit/hmc.hpp"
#include "hmcsplit/random.hpp"
#include "hmcsplit/targets.hpp"

namespace hmcsplit {

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int SchemeRule::steps(std::size_t d) const {
  return std::max(1, static_cast<int>(std::lround(steps_factor * static_cast<double>(d))));
}

void ExperimentPlan::check() const {
  if (rules.empty()) throw std::invalid_argument("plan '" + name + "' has no schemes");
  if (dims.empty()) throw std::invalid_argument("plan '" + name + "' has no dimensions");
  if (replicas < 1 || chain_length < 1) {
    throw std::invalid_argument("plan '" + name + "' needs positive replicas and chain length");
  }
  if (!equal_work) return;
  long max_stage = 0;
  for (const auto& r : rules) max_stage = std::max<long>(max_stage, r.scheme.stage_count());
  for (std::size_t d : dims) {
    long lo = rules.front().work(d), hi = lo;
    for (const auto& r : rules) {
      lo = std::min(lo, r.work(d));
      hi = std::max(hi, r.work(d));
    }
    if (hi - lo > max_stage) {
      throw std::invalid_argument("plan '" + name + "' is not equal-work at d = " +
                                  std::to_string(d) + ": " + std::to_string(lo) + " vs " +
                                  std::to_string(hi) + " gradients per proposal");
    }
  }
}

std::vector<SweepRow> run_sweep(const ExperimentPlan& plan, unsigned threads) {
  plan.check();
  const std::size_t nd = plan.dims.size(), nr = plan.rules.size();
  const std::size_t reps = static_cast<std::size_t>(plan.replicas);
  std::vector<ChainSummary> runs(nd * nr * reps);

  // largest dimensions first: better load balance
  std::vector<std::size_t> order(runs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return plan.dims[x / (nr * reps)] > plan.dims[y / (nr * reps)];
  });

  parallel_for(runs.size(), threads, [&](std::size_t slot) {
    const std::size_t task = order[slot];
    const std::size_t i = task / (nr * reps);
    const std::size_t k = (task / reps) % nr;
    const std::size_t r = task % reps;
    const std::size_t d = plan.dims[i];
    const auto& rule = plan.rules[k];
    HmcConfig config;
    config.h0 = rule.h0(d);
    config.jitter = plan.jitter;
    config.steps_per_proposal = rule.steps(d);
    config.chain_length = plan.chain_length;
    config.seed = derive_seed(plan.seed, (i * nr + k) * 4096 + r);
    runs[task] = hmc_run(gaussian_chain(d), rule.scheme, config);
  });

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < nd; ++i) {
    for (std::size_t k = 0; k < nr; ++k) {
      const auto& rule = plan.rules[k];
      const std::size_t d = plan.dims[i];
      SweepRow row{d, rule.label, rule.scheme.label(), rule.h0(d), rule.steps(d),
                   plan.replicas, 0, 0, 0, 0, 0};
      double acc = 0, acc2 = 0, del = 0, del2 = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        const auto& s = runs[(i * nr + k) * reps + r];
        acc += s.accepted_fraction;
        acc2 += s.accepted_fraction * s.accepted_fraction;
        del += s.mean_energy_error;
        del2 += s.mean_energy_error * s.mean_energy_error;
        row.gradient_evaluations += s.gradient_evaluations;
      }
      const double n = static_cast<double>(reps);
      row.acceptance = acc / n;
      row.mean_delta = del / n;
      if (reps > 1) {
        row.acceptance_stderr = std::sqrt(std::max(0.0, acc2 / n - row.acceptance * row.acceptance) / (n - 1));
        row.mean_delta_stderr = std::sqrt(std::max(0.0, del2 / n - row.mean_delta * row.mean_delta) / (n - 1));
      } else {
        row.mean_delta_stderr = runs[(i * nr + k) * reps].energy_error_stderr;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

bool equal_work_audit(const std::vector<SweepRow>& rows, const ExperimentPlan& plan) {
  long max_stage = 0;
  for (const auto& r : plan.rules) max_stage = std::max<long>(max_stage, r.scheme.stage_count());
  const double proposals = static_cast<double>(plan.replicas) * static_cast<double>(plan.chain_length);
  for (std::size_t d : plan.dims) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& row : rows) {
      if (row.d != d) continue;
      const double per = static_cast<double>(row.gradient_evaluations) / proposals;
      lo = std::min(lo, per);
      hi = std::max(hi, per);
    }
    // one extra evaluation per replica for a cold kick-first start
    if (hi - lo > static_cast<double>(max_stage) + 1.0 / static_cast<double>(plan.chain_length)) {
      return false;
    }
  }
  return true;
}

std::vector<std::size_t> powers_of_two(std::size_t max_d, std::size_t min_d) {
  std::vector<std::size_t> out;
  for (std::size_t d = 1; d <= max_d; d *= 2) {
    if (d >= min_d) out.push_back(d);
  }
  return out;
}

ExperimentPlan fig2_plan(std::size_t max_d, long chain_length, std::uint64_t seed) {
  const auto vv = catalog("VV");
  ExperimentPlan plan;
  plan.name = "fig2";
  plan.rules = {{"h0=1/d", vv, 1.0, 2.0}, {"h0=1/(2d)", vv, 0.5, 4.0}};
  plan.dims = powers_of_two(max_d);
  plan.chain_length = chain_length;
  plan.seed = seed;
  plan.equal_work = false;  // the two rules differ in cost on purpose
  return plan;
}

ExperimentPlan fig45_plan(std::size_t max_d, long chain_length, int replicas, std::uint64_t seed) {
  ExperimentPlan plan;
  plan.name = "fig45";
  plan.rules = {{"PV", catalog("PV"), 1.0, 2.0},
                {"MCLACHLAN2", catalog("MCLACHLAN2"), 2.0, 1.0},
                {"MINRHO2", catalog("MINRHO2"), 2.0, 1.0},
                {"MINRHO3", catalog("MINRHO3"), 3.0, 2.0 / 3.0},
                {"MINRHO4", catalog("MINRHO4"), 4.0, 0.5}};
  plan.dims = powers_of_two(max_d);
  plan.chain_length = chain_length;
  plan.replicas = replicas;
  plan.seed = seed;
  return plan;
}

double verlet_rho_integral() {
  const auto vv = catalog("VV");
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double z) { return z > 0.0 ? rho(vv, z) : 0.0; }, 0.0, 1.0, 5, 1e-13);
}

std::vector<BenchRow> bench_double_well(int replicas, long chain_length, std::uint64_t seed,
                                        unsigned threads, double verlet_step) {
  // Equal work: r-stage schemes take r times the Verlet step and 1/r of the steps.
  const double kVerletStep = verlet_step;
  constexpr int kVerletSteps = 12;
  struct Case {
    std::string label;
    SplittingScheme scheme;
    double h;
    int steps;
  };
  std::vector<Case> cases;
  for (const char* name : {"PV", "MCLACHLAN2", "MINRHO2", "MINRHO3", "MINRHO4"}) {
    auto s = catalog(name);
    const int r = s.stage_count();
    cases.push_back({name, s, kVerletStep * r, kVerletSteps / r});
  }
  cases.push_back({"PV@2h", catalog("PV"), 2 * kVerletStep, kVerletSteps / 2});

  const std::size_t reps = static_cast<std::size_t>(replicas);
  std::vector<double> acceptance(cases.size() * reps);
  const auto target = double_well();
  parallel_for(acceptance.size(), threads, [&](std::size_t task) {
    const auto& c = cases[task / reps];
    HmcConfig config;
    config.h0 = c.h;
    config.steps_per_proposal = c.steps;
    config.chain_length = chain_length;
    config.burn_in = 200;
    config.start = HmcConfig::Start::GivenPoint;
    config.start_point = {std::sqrt(0.5)};
    config.seed = derive_seed(seed, task);
    acceptance[task] = hmc_run(target, c.scheme, config).accepted_fraction;
  });

  std::vector<BenchRow> rows;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    double m = 0, m2 = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const double a = acceptance[k * reps + r];
      m += a;
      m2 += a * a;
    }
    const double n = static_cast<double>(reps);
    m /= n;
    const double var = reps > 1 ? std::max(0.0, (m2 - n * m * m) / (n - 1)) : 0.0;
    rows.push_back({cases[k].label, cases[k].scheme.label(), cases[k].h, cases[k].steps,
                    replicas, m, std::sqrt(var)});
  }
  return rows;
}

}  // namespace hmcsplit
