#include "hmcsplit/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "hmcsplit/harmonic.hpp"

namespace hmcsplit {

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_dims(const Target& target, const PhaseState& s) {
  if (s.q.size() != target.dim() || s.p.size() != target.dim()) {
    throw std::invalid_argument("state dimension does not match target '" + target.name() + "'");
  }
}

// Random phase point: stationary when the target knows how, else standard normal.
void random_point(const Target& target, Rng& rng, std::vector<double>& q, std::vector<double>& p) {
  q.resize(target.dim());
  p.resize(target.dim());
  if (target.has_exact_sampler()) {
    target.sample_exact(rng, q, p);
    return;
  }
  for (auto& x : q) x = rng.normal();
  for (auto& x : p) x = rng.normal();
}

// Psi applied to (q, p), cold start.
void flow(const SplittingScheme& scheme, const Target& target, double h, int steps,
          std::vector<double>& q, std::vector<double>& p) {
  integrate(scheme, target, h, steps, q, p);
}

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

int prepare_gradient(const Target& target, PhaseState& state) {
  if (state.grad_valid && state.grad.size() == target.dim()) return 0;
  state.grad.resize(target.dim());
  target.gradient(state.q, state.grad);
  state.grad_valid = true;
  return 1;
}

long integrate(const SplittingScheme& scheme, const Target& target, double h, int steps,
               PhaseState& s) {
  check_dims(target, s);
  if (!(h > 0.0 && std::isfinite(h))) throw std::invalid_argument("integrate: h must be positive");
  if (steps < 1) throw std::invalid_argument("integrate: steps must be >= 1");
  if (s.grad.size() != target.dim()) {
    s.grad.assign(target.dim(), 0.0);
    s.grad_valid = false;
  }

  const auto c = scheme.coefficients();
  const std::size_t n = c.size();
  const std::size_t d = target.dim();
  const auto& mass = target.mass_diag();
  long evaluations = 0;

  for (int step = 0; step < steps; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i == 0 && step > 0) continue;  // fused into the previous step's last substep
      double t = c[i] * h;
      if (i + 1 == n && step + 1 < steps) t += c[0] * h;
      if (t == 0.0) continue;

      if (scheme.kind_at(i) == FlowKind::Drift) {
        for (std::size_t j = 0; j < d; ++j) s.q[j] += t * s.p[j] / mass[j];
        s.grad_valid = false;
      } else {
        if (!s.grad_valid) {
          target.gradient(s.q, s.grad);
          s.grad_valid = true;
          ++evaluations;
        }
        for (std::size_t j = 0; j < d; ++j) s.p[j] -= t * s.grad[j];
      }
    }
    if (!all_finite(s.q) || !all_finite(s.p)) {
      throw NonFiniteStateError("non-finite state after time-step " + std::to_string(step), step);
    }
  }
  return evaluations;
}

long integrate(const SplittingScheme& scheme, const Target& target, double h, int steps,
               std::vector<double>& q, std::vector<double>& p) {
  PhaseState s{std::move(q), std::move(p), {}, false};
  struct Restore {
    PhaseState& s;
    std::vector<double>& q;
    std::vector<double>& p;
    ~Restore() {
      q = std::move(s.q);
      p = std::move(s.p);
    }
  } restore{s, q, p};
  return integrate(scheme, target, h, steps, s);
}

void HmcConfig::validate() const {
  if (!(h0 > 0.0 && std::isfinite(h0))) throw std::invalid_argument("h0 must be positive");
  if (!(jitter >= 0.0 && jitter < 1.0)) throw std::invalid_argument("jitter must be in [0, 1)");
  if (steps_per_proposal < 1) throw std::invalid_argument("steps_per_proposal must be >= 1");
  if (chain_length < 1) throw std::invalid_argument("chain_length must be >= 1");
  if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
}

ChainSummary hmc_run(const Target& target, const SplittingScheme& scheme,
                     const HmcConfig& config) {
  config.validate();
  const std::size_t d = target.dim();
  Rng rng(config.seed);

  PhaseState current;
  current.q.resize(d);
  current.p.resize(d);
  if (config.start == HmcConfig::Start::ExactStationary) {
    if (!target.has_exact_sampler()) {
      throw std::invalid_argument("target '" + target.name() +
                                  "' has no exact sampler; give a start point");
    }
    target.sample_exact(rng, current.q, current.p);
  } else {
    if (config.start_point.size() != d) {
      throw std::invalid_argument("start point has dimension " +
                                  std::to_string(config.start_point.size()) + ", target has " +
                                  std::to_string(d));
    }
    current.q = config.start_point;
  }

  std::vector<double> sqrt_mass(d);
  for (std::size_t j = 0; j < d; ++j) sqrt_mass[j] = std::sqrt(target.mass_diag()[j]);

  ChainSummary out;
  if (config.record) out.records.reserve(static_cast<std::size_t>(config.chain_length));
  double v_current = target.potential(current.q);
  double sum = 0.0, sum_sq = 0.0;
  long finite = 0;
  PhaseState proposal;

  const long total = config.burn_in + config.chain_length;
  for (long n = 0; n < total; ++n) {
    for (std::size_t j = 0; j < d; ++j) current.p[j] = sqrt_mass[j] * rng.normal();
    const double u = config.jitter * (2.0 * rng.uniform() - 1.0);
    const double h = (1.0 + u) * config.h0;
    const double h_start = v_current + target.kinetic(current.p);

    proposal.q = current.q;
    proposal.p = current.p;
    proposal.grad = current.grad;
    proposal.grad_valid = current.grad_valid;

    double delta = std::numeric_limits<double>::infinity();
    double v_proposal = 0.0;
    try {
      out.gradient_evaluations +=
          static_cast<std::uint64_t>(integrate(scheme, target, h, config.steps_per_proposal, proposal));
      v_proposal = target.potential(proposal.q);
      const double d_energy = v_proposal + target.kinetic(proposal.p) - h_start;
      if (std::isfinite(d_energy)) delta = d_energy;
    } catch (const NonFiniteStateError&) {
      // counted as a rejection below
    }

    const double coin = rng.uniform();
    const bool ok = std::isfinite(delta);
    const bool accepted = ok && (delta <= 0.0 || coin < std::exp(-delta));
    if (accepted) {
      std::swap(current, proposal);
      v_current = v_proposal;
    }

    if (n < config.burn_in) continue;
    ++out.proposals;
    if (accepted) ++out.accepted;
    if (ok) {
      sum += delta;
      sum_sq += delta * delta;
      ++finite;
    } else {
      ++out.nonfinite;
    }
    if (config.record) out.records.push_back({delta, accepted, h});
  }

  out.accepted_fraction = static_cast<double>(out.accepted) / static_cast<double>(out.proposals);
  if (finite > 0) {
    const double nf = static_cast<double>(finite);
    out.mean_energy_error = sum / nf;
    out.mean_squared_energy_error = sum_sq / nf;
    const double var = std::max(0.0, out.mean_squared_energy_error -
                                         out.mean_energy_error * out.mean_energy_error);
    out.energy_error_stderr = finite > 1 ? std::sqrt(var / (nf - 1.0)) : 0.0;
  }
  return out;
}

double expected_energy_error_harmonic(const SplittingScheme& scheme, double h, int steps) {
  const auto dg = diagnostics(scheme, h);
  if (!dg.stable) throw InstabilityError("step-size is unstable for this scheme", h);
  const double s = std::sin(steps * dg.theta);
  return s * s * dg.rho;
}

double reversibility_check(const SplittingScheme& scheme, const Target& target, double h,
                           int steps, int sample_count, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  std::vector<double> q0, p0;
  for (int k = 0; k < sample_count; ++k) {
    random_point(target, rng, q0, p0);
    auto q = q0, p = p0;
    flow(scheme, target, h, steps, q, p);
    for (auto& x : p) x = -x;
    flow(scheme, target, h, steps, q, p);
    for (auto& x : p) x = -x;
    const double scale = std::max({1.0, sup_norm(q0), sup_norm(p0)});
    for (std::size_t j = 0; j < q.size(); ++j) {
      worst = std::max(worst, std::abs(q[j] - q0[j]) / scale);
      worst = std::max(worst, std::abs(p[j] - p0[j]) / scale);
    }
  }
  return worst;
}

double energy_antisymmetry_check(const SplittingScheme& scheme, const Target& target, double h,
                                 int steps, int sample_count, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  std::vector<double> q, p;
  for (int k = 0; k < sample_count; ++k) {
    random_point(target, rng, q, p);
    const double h0 = target.hamiltonian(q, p);
    flow(scheme, target, h, steps, q, p);
    const double h1 = target.hamiltonian(q, p);
    for (auto& x : p) x = -x;
    const double h1_flipped = target.hamiltonian(q, p);
    flow(scheme, target, h, steps, q, p);
    const double h2 = target.hamiltonian(q, p);
    worst = std::max(worst, std::abs((h1 - h0) + (h2 - h1_flipped)));
  }
  return worst;
}

double volume_check(const SplittingScheme& scheme, const Target& target, double h, int steps,
                    int sample_count, double fd_step, std::uint64_t seed) {
  const std::size_t d = target.dim();
  const std::size_t n = 2 * d;
  Rng rng(seed);
  Eigen::MatrixXd jac(n, n);
  std::vector<double> q0, p0;

  auto image = [&](std::vector<double> q, std::vector<double> p, Eigen::VectorXd& out) {
    flow(scheme, target, h, steps, q, p);
    for (std::size_t j = 0; j < d; ++j) {
      out[j] = q[j];
      out[d + j] = p[j];
    }
  };

  double worst = 0.0;
  Eigen::VectorXd plus(n), minus(n);
  for (int k = 0; k < sample_count; ++k) {
    random_point(target, rng, q0, p0);
    for (std::size_t col = 0; col < n; ++col) {
      if (target.frequencies()) {
        std::vector<double> q(d, 0.0), p(d, 0.0);
        (col < d ? q[col] : p[col - d]) = 1.0;
        image(q, p, plus);
        jac.col(col) = plus;
      } else {
        auto q = q0, p = p0;
        (col < d ? q[col] : p[col - d]) += fd_step;
        image(q, p, plus);
        q = q0;
        p = p0;
        (col < d ? q[col] : p[col - d]) -= fd_step;
        image(q, p, minus);
        jac.col(col) = (plus - minus) / (2.0 * fd_step);
      }
    }
    worst = std::max(worst, std::abs(jac.determinant() - 1.0));
    if (target.frequencies()) break;  // the map is linear, one sample suffices
  }
  return worst;
}

}  // namespace hmcsplit
