#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hmcsplit/experiments.hpp"
#include "hmcsplit/harmonic.hpp"
#include "hmcsplit/hmc.hpp"
#include "hmcsplit/optimize.hpp"
#include "hmcsplit/schemes.hpp"
#include "hmcsplit/targets.hpp"

#ifndef HMCSPLIT_VERSION
#define HMCSPLIT_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace hmcsplit;
using nlohmann::json;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

struct Globals {
  std::uint64_t seed = 20100517;
  unsigned threads = 0;
  std::string out = "out";
  bool full = false;
};

// Numerical failures that map to exit code 3.
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string coefficients_text(const SplittingScheme& s) {
  std::ostringstream os;
  os.precision(17);
  os << s.label() << "=" << to_string(s.leading_kind()) << "[";
  for (std::size_t i = 0; i < s.coefficients().size(); ++i) {
    os << (i ? " " : "") << s.coefficients()[i];
  }
  os << "]";
  return os.str();
}

fs::path out_path(const Globals& g, const std::string& file) {
  fs::create_directories(g.out);
  return fs::path(g.out) / file;
}

// CSV with the provenance comment line followed by the header row.
class CsvWriter {
public:
  CsvWriter(const fs::path& path, const Globals& g, const std::vector<SplittingScheme>& schemes,
            const std::string& header)
      : path_(path), os_(path) {
    if (!os_) throw std::runtime_error("cannot write " + path.string());
    os_ << "# hmcsplit " << HMCSPLIT_VERSION << " seed=" << g.seed;
    for (const auto& s : schemes) os_ << " " << coefficients_text(s);
    os_ << "\n" << header << "\n";
    os_.precision(10);
  }
  std::ostream& row() { return os_; }
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
  std::ofstream os_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

SplittingScheme resolve(const std::string& name_or_file) {
  if (fs::exists(name_or_file)) {
    std::ifstream is(name_or_file);
    json j = json::parse(is);
    if (j.is_array()) {
      if (j.empty()) throw std::invalid_argument(name_or_file + " holds no schemes");
      j = j.back();
    }
    if (j.contains("scheme")) j = j.at("scheme");
    return scheme_from_json(j);
  }
  return lookup_scheme(name_or_file);
}

// ---- schemes ----------------------------------------------------------------

void cmd_schemes_list() {
  for (const auto& name : lookup_names()) {
    const auto s = lookup_scheme(name);
    std::cout << coefficients_text(s) << "\n";
  }
}

void cmd_schemes_show(const std::string& name) {
  std::cout << json(resolve(name)).dump(2) << "\n";
}

// ---- analyze ----------------------------------------------------------------

void cmd_analyze(const Globals& g, const std::string& name, double h_bar, int points) {
  if (!(h_bar > 0.0)) throw std::invalid_argument("--hbar must be positive");
  if (points < 2) throw std::invalid_argument("--points must be >= 2");
  const auto scheme = resolve(name);
  const double h_max = stability_interval(scheme);
  if (h_max <= 0.0) throw NumericalFailure("scheme " + scheme.label() + " is unstable for all h");

  const std::string stem = "analyze_" + (scheme.label().empty() ? "scheme" : scheme.label());
  CsvWriter csv(out_path(g, stem + ".csv"), g, {scheme}, "h,a_h,b_h,c_h,theta,chi,rho,stable");
  for (int i = 1; i <= points; ++i) {
    const double h = h_bar * i / points;
    const auto u = harmonic_update(scheme, h);
    const auto dg = diagnostics(scheme, h);
    csv.row() << h << "," << u.a << "," << u.b << "," << u.c << "," << dg.theta << "," << dg.chi
              << "," << dg.rho << "," << (dg.stable ? 1 : 0) << "\n";
  }

  json summary{{"scheme", scheme}, {"h_bar", h_bar}, {"stability_interval", h_max}};
  const double norm = rho_norm(scheme, h_bar);
  summary["rho_norm"] = std::isfinite(norm) ? json(norm) : json(nullptr);
  try {
    const auto k = error_constants(scheme);
    summary["k31"] = k.k31;
    summary["k32"] = k.k32;
  } catch (const ExtrapolationError& e) {
    summary["k31"] = nullptr;
    summary["k32"] = nullptr;
    summary["error_constants_failure"] = e.what();
  }
  write_json(out_path(g, stem + ".json"), summary);
  write_text(out_path(g, stem + ".gp"),
             "set datafile separator ','\nset logscale y\nset xlabel 'h'\nset ylabel 'rho(h)'\n"
             "plot '" + stem + ".csv' every ::2 using 1:7 with lines title '" + scheme.label() +
             "'\n");
  std::cout << summary.dump(2) << "\n";
}

// ---- optimize ---------------------------------------------------------------

void cmd_optimize(const Globals& g, const std::string& family_text, double h_bar,
                  const std::string& catalog_file) {
  const Family family = family_from_string(family_text);
  OptimizationReport report = [&] {
    switch (family) {
      case Family::TwoStage: return optimize_two_stage(h_bar);
      case Family::ThreeStage: return optimize_three_stage();
      case Family::FourStage: return optimize_four_stage();
    }
    throw std::logic_error("unreachable");
  }();
  report.scheme = report.scheme.with_label("OPT_" + std::string(to_string(family)));

  json j = report;
  write_json(out_path(g, "optimize_" + std::string(to_string(family)) + ".json"), j);

  const fs::path cat = catalog_file.empty() ? out_path(g, "scheme_catalog.json") : fs::path(catalog_file);
  json entries = json::array();
  if (fs::exists(cat)) {
    std::ifstream is(cat);
    entries = json::parse(is);
    if (!entries.is_array()) throw std::invalid_argument(cat.string() + " is not a JSON array");
  }
  entries.push_back(report.scheme);
  write_json(cat, entries);

  j.erase("trace");
  std::cout << j.dump(2) << "\n";
}

// ---- sample -----------------------------------------------------------------

struct SampleArgs {
  std::string target;
  std::string scheme;
  double h0 = 0.0;
  int steps = 1;
  long length = 1000;
  long burnin = 0;
  double jitter = 0.2;
  bool record = false;
  std::vector<double> start;
};

void cmd_sample(const Globals& g, const SampleArgs& a) {
  const auto target = parse_target(a.target);
  const auto scheme = resolve(a.scheme);
  HmcConfig config;
  config.h0 = a.h0;
  config.jitter = a.jitter;
  config.steps_per_proposal = a.steps;
  config.chain_length = a.length;
  config.burn_in = a.burnin;
  config.seed = g.seed;
  config.record = a.record;
  if (!a.start.empty()) {
    config.start = HmcConfig::Start::GivenPoint;
    config.start_point = a.start;
  } else if (!target.has_exact_sampler()) {
    config.start = HmcConfig::Start::GivenPoint;
    config.start_point.assign(target.dim(), 0.0);
  }
  const auto s = hmc_run(target, scheme, config);
  if (s.nonfinite == s.proposals) {
    throw NumericalFailure("every trajectory overflowed; the step-size is unstable");
  }

  json j{{"target", target.name()},
         {"scheme", scheme},
         {"h0", a.h0},
         {"steps_per_proposal", a.steps},
         {"chain_length", a.length},
         {"burn_in", a.burnin},
         {"jitter", a.jitter},
         {"seed", g.seed},
         {"proposals", s.proposals},
         {"accepted", s.accepted},
         {"accepted_fraction", s.accepted_fraction},
         {"mean_energy_error", s.mean_energy_error},
         {"mean_squared_energy_error", s.mean_squared_energy_error},
         {"energy_error_stderr", s.energy_error_stderr},
         {"nonfinite", s.nonfinite},
         {"gradient_evaluations", s.gradient_evaluations}};
  write_json(out_path(g, "sample.json"), j);
  if (a.record) {
    CsvWriter csv(out_path(g, "sample_records.csv"), g, {scheme}, "step,h_used,delta,accepted");
    for (std::size_t i = 0; i < s.records.size(); ++i) {
      const auto& r = s.records[i];
      csv.row() << i << "," << r.h_used << ",";
      if (std::isfinite(r.delta)) csv.row() << r.delta; else csv.row() << "inf";
      csv.row() << "," << (r.accepted ? 1 : 0) << "\n";
    }
  }
  std::cout << j.dump(2) << "\n";
}

// ---- reproduce --------------------------------------------------------------

struct ScaleArgs {
  std::size_t max_d = 0;
  long length = 0;
  int replicas = 0;
};

void reproduce_fig2(const Globals& g, const ScaleArgs& s) {
  const std::size_t max_d = s.max_d ? s.max_d : (g.full ? 1024 : 256);
  const long n = s.length ? s.length : (g.full ? 5000 : 1000);
  const auto plan = fig2_plan(max_d, n, g.seed);
  const auto rows = run_sweep(plan, g.threads);
  const double slope = verlet_rho_integral();

  CsvWriter csv(out_path(g, "fig2.csv"), g, {catalog("VV")},
                "d,rule,h0,steps,acceptance,mean_delta,mean_delta_stderr,reference");
  for (const auto& r : rows) {
    csv.row() << r.d << "," << r.label << "," << r.h0 << "," << r.steps << "," << r.acceptance
              << "," << r.mean_delta << "," << r.mean_delta_stderr << ","
              << slope * static_cast<double>(r.d) << "\n";
  }
  write_text(out_path(g, "fig2.gp"),
             "set datafile separator ','\nset logscale x 2\nset key left\n"
             "set multiplot layout 1,2\n"
             "set ylabel 'acceptance'\n"
             "plot 'fig2.csv' every ::2 using ($2 eq 'h0=1/d' ? $1 : 1/0):5 with points pt 3 title "
             "'h0=1/d', '' every ::2 using ($2 eq 'h0=1/(2d)' ? $1 : 1/0):5 with points pt 4 "
             "title 'h0=1/(2d)'\n"
             "set logscale y\nset ylabel 'mean energy error'\n"
             "plot 'fig2.csv' every ::2 using ($2 eq 'h0=1/d' ? $1 : 1/0):6 with points pt 3 "
             "title 'h0=1/d', '' every ::2 using ($2 eq 'h0=1/(2d)' ? $1 : 1/0):6 with points "
             "pt 4 title 'h0=1/(2d)', '' every ::2 using 1:8 with lines title 'd int rho'\n"
             "unset multiplot\n");
  std::printf("fig2: %zu rows, reference slope %.6g -> %s\n", rows.size(), slope,
              csv.path().c_str());
}

void reproduce_fig3(const Globals& g) {
  struct Member {
    std::string name;
    double a1;
  };
  const std::vector<Member> members{{"QUARTER", 0.25},
                                    {"MCLACHLAN2", constants::kMinErrorA1},
                                    {"MINRHO2", constants::min_rho2_a1()}};
  std::vector<SplittingScheme> schemes;
  for (const auto& m : members) schemes.push_back(make_two_stage(m.a1).with_label(m.name));

  CsvWriter curves(out_path(g, "fig3.csv"), g, schemes, "scheme,a1,h,rho");
  CsvWriter asym(out_path(g, "fig3_asymptotes.csv"), g, schemes, "scheme,a1,asymptote");
  constexpr double kStep = 0.005;
  for (std::size_t k = 0; k < members.size(); ++k) {
    const double edge = stability_interval(schemes[k]);
    asym.row() << members[k].name << "," << members[k].a1 << "," << edge << "\n";
    for (double h = kStep; h < edge; h += kStep) {
      curves.row() << members[k].name << "," << members[k].a1 << "," << h << ","
                   << rho(schemes[k], h) << "\n";
    }
  }
  write_text(out_path(g, "fig3.gp"),
             "set datafile separator ','\nset logscale y\nset xrange [0:4]\nset yrange [1e-8:1]\n"
             "plot for [s in 'QUARTER MCLACHLAN2 MINRHO2'] 'fig3.csv' every ::2 "
             "using (strcol(1) eq s ? $3 : 1/0):4 with lines title s\n");
  std::printf("fig3 -> %s, %s\n", curves.path().c_str(), asym.path().c_str());
}

void reproduce_fig45(const Globals& g, const ScaleArgs& s, const std::string& which) {
  const std::size_t max_d = s.max_d ? s.max_d : (g.full ? 1024 : 256);
  const long n = s.length ? s.length : (g.full ? 5000 : 1000);
  const int replicas = s.replicas ? s.replicas : (g.full ? 20 : 1);
  auto plan = fig45_plan(max_d, n, replicas, g.seed);
  const std::vector<std::string> keep =
      which == "fig4" ? std::vector<std::string>{"PV", "MCLACHLAN2", "MINRHO2"}
                      : std::vector<std::string>{"PV", "MINRHO2", "MINRHO3", "MINRHO4"};
  std::erase_if(plan.rules, [&](const SchemeRule& r) {
    return std::find(keep.begin(), keep.end(), r.label) == keep.end();
  });
  const auto rows = run_sweep(plan, g.threads);
  if (!equal_work_audit(rows, plan)) throw NumericalFailure("equal-work audit failed");

  std::vector<SplittingScheme> schemes;
  for (const auto& r : plan.rules) schemes.push_back(r.scheme);
  CsvWriter csv(out_path(g, which + ".csv"), g, schemes,
                "d,scheme,h0,steps,replicas,acceptance,acceptance_stderr,mean_delta,"
                "gradient_evaluations");
  for (const auto& r : rows) {
    csv.row() << r.d << "," << r.label << "," << r.h0 << "," << r.steps << "," << r.replicas << ","
              << r.acceptance << "," << r.acceptance_stderr << "," << r.mean_delta << ","
              << r.gradient_evaluations << "\n";
  }
  std::string names;
  for (const auto& k : keep) names += (names.empty() ? "" : " ") + k;
  write_text(out_path(g, which + ".gp"),
             "set datafile separator ','\nset logscale x 2\nset yrange [0:1]\nset key left bottom\n"
             "plot for [s in '" + names + "'] '" + which + ".csv' every ::2 "
             "using (strcol(2) eq s ? $1 : 1/0):6 with linespoints title s\n");
  std::printf("%s: %zu rows -> %s\n", which.c_str(), rows.size(), csv.path().c_str());
}

void reproduce_bench(const Globals& g, const ScaleArgs& s) {
  const int replicas = s.replicas ? s.replicas : (g.full ? 100 : 20);
  const long n = s.length ? s.length : (g.full ? 5000 : 1000);
  const auto rows = bench_double_well(replicas, n, g.seed, g.threads);
  json table = json::array();
  for (const auto& r : rows) {
    table.push_back({{"label", r.label}, {"scheme", r.scheme}, {"h", r.h}, {"steps", r.steps},
                     {"replicas", r.replicas}, {"mu", r.mu}, {"sigma", r.sigma}});
  }
  std::vector<BenchRow> ranked(rows.begin(), rows.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const BenchRow& a, const BenchRow& b) { return a.mu > b.mu; });
  json order = json::array();
  for (const auto& r : ranked) order.push_back(r.label);
  const json j{{"target", "dwell"}, {"chain_length", n}, {"burn_in", 200}, {"seed", g.seed},
               {"version", HMCSPLIT_VERSION}, {"rows", table}, {"rank_order", order}};
  write_json(out_path(g, "bench.json"), j);
  std::cout << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Splitting integrators for Hybrid Monte Carlo: analysis, optimization, sampling"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_flag("--full", g.full, "Full-scale parameters instead of CI-scale defaults");

  auto* schemes = app.add_subcommand("schemes", "List or show catalogued schemes");
  schemes->require_subcommand(1);
  schemes->add_subcommand("list", "One line per scheme")->callback(cmd_schemes_list);
  std::string show_name;
  auto* show = schemes->add_subcommand("show", "Scheme as JSON");
  show->add_option("name", show_name, "Catalog name or JSON file")->required();
  show->callback([&] { cmd_schemes_show(show_name); });

  std::string analyze_scheme;
  double analyze_hbar = 0.0;
  int analyze_points = 2048;
  auto* analyze = app.add_subcommand("analyze", "Harmonic-oscillator analysis of one scheme");
  analyze->add_option("--scheme", analyze_scheme, "Catalog name or JSON file")->required();
  analyze->add_option("--hbar", analyze_hbar, "Upper end of the step-size range")->required();
  analyze->add_option("--points", analyze_points, "CSV rows")->capture_default_str();
  analyze->callback([&] { cmd_analyze(g, analyze_scheme, analyze_hbar, analyze_points); });

  std::string family;
  double opt_hbar = 2.0;
  std::string catalog_file;
  auto* optimize = app.add_subcommand("optimize", "Minimize ||rho|| over a scheme family");
  optimize->add_option("--family", family, "2stage, 3stage or 4stage")
      ->required()
      ->check(CLI::IsMember({"2stage", "3stage", "4stage"}));
  optimize->add_option("--hbar", opt_hbar, "h_bar for the two-stage family")->capture_default_str();
  optimize->add_option("--catalog", catalog_file, "Scheme catalog file to append to");
  optimize->callback([&] { cmd_optimize(g, family, opt_hbar, catalog_file); });

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Run one HMC chain");
  sample->add_option("--target", sa.target, "chain:<d>, dwell, diag:<w1,...>, gauss:<d>")->required();
  sample->add_option("--scheme", sa.scheme, "Catalog name or JSON file")->required();
  sample->add_option("--h0", sa.h0, "Mean step-size")->required();
  sample->add_option("--steps", sa.steps, "Time-steps per proposal")->required();
  sample->add_option("--length", sa.length, "Proposals after burn-in")->capture_default_str();
  sample->add_option("--burnin", sa.burnin, "Burn-in proposals")->capture_default_str();
  sample->add_option("--jitter", sa.jitter, "Step-size jitter fraction")->capture_default_str();
  sample->add_option("--start", sa.start, "Start point (default: stationary draw)");
  sample->add_flag("--record", sa.record, "Write per-proposal CSV");
  sample->callback([&] { cmd_sample(g, sa); });

  ScaleArgs scale;
  auto* reproduce = app.add_subcommand("reproduce", "Regenerate a figure or benchmark table");
  reproduce->require_subcommand(1);
  reproduce->add_option("--max-d", scale.max_d, "Largest dimension in sweeps");
  reproduce->add_option("--length", scale.length, "Chain length");
  reproduce->add_option("--replicas", scale.replicas, "Replica chains");
  reproduce->add_subcommand("fig2", "Verlet acceptance and energy error vs d")
      ->callback([&] { reproduce_fig2(g, scale); });
  reproduce->add_subcommand("fig3", "rho(h) for three two-stage members")
      ->callback([&] { reproduce_fig3(g); });
  reproduce->add_subcommand("fig4", "Two-stage methods vs Verlet at equal work")
      ->callback([&] { reproduce_fig45(g, scale, "fig4"); });
  reproduce->add_subcommand("fig5", "Three- and four-stage methods at equal work")
      ->callback([&] { reproduce_fig45(g, scale, "fig5"); });
  reproduce->add_subcommand("bench", "Double-well acceptance over replicas")
      ->callback([&] { reproduce_bench(g, scale); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  } catch (const InstabilityError& e) {
    std::cerr << "error: " << e.what() << " (h = " << e.step() << ")\n";
    return kExitNumerical;
  } catch (const NumericalFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const OptimizationFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const BracketError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ExtrapolationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NonFiniteStateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
