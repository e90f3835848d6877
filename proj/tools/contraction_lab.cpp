// contraction-lab: simulate posterior diffusions, solve the contraction rate
// equation, check the concavity/perturbation assumptions, and run scaling
// studies over (n, d).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "contraction/assumptions.hpp"
#include "contraction/harness.hpp"
#include "contraction/io.hpp"
#include "contraction/perturbation.hpp"
#include "contraction/rate.hpp"
#include "contraction/version.hpp"

using namespace contraction;

namespace {

ModelSpec build_spec(const std::string& model, int d, int p) {
  return ModelSpec::paper_regime(model_kind_from_string(model), d, p);
}

RateProfile build_profile(const std::string& name, double n, int p) {
  if (name == "logistic") return logistic_profile();
  if (name == "single-index" || name == "single_index") return single_index_profile(p);
  if (name == "gmm") return gmm_profile(n);
  throw config_error("unknown profile preset: " + name + " (try a JSON file instead)");
}

std::vector<double> parse_r_grid(const std::string& s) {
  // "lo:hi:count" linear grid, or comma-separated values
  const auto c1 = s.find(':');
  if (c1 == std::string::npos) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
  }
  const auto c2 = s.find(':', c1 + 1);
  if (c2 == std::string::npos) throw config_error("r-grid: expected lo:hi:count");
  const double lo = std::stod(s.substr(0, c1));
  const double hi = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
  const int count = std::stoi(s.substr(c2 + 1));
  if (count < 1) throw config_error("r-grid: count must be >= 1");
  std::vector<double> out;
  for (int i = 0; i < count; ++i)
    out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
  return out;
}

int cmd_simulate(const std::string& model, long n, int d, int p, const std::string& sampler,
                 std::uint64_t seed, long steps, int chains, double step_size,
                 double prior_sigma, const std::string& out) {
  const ModelSpec spec = build_spec(model, d, p);
  auto data = std::make_shared<const Dataset>(generate_dataset(spec, n, seed));
  const PriorSpec prior(VectorXd::Zero(d), prior_sigma);
  const GradOracle oracle = GradOracle::posterior(spec, data, prior);
  const SdeTarget target = make_sde_target(oracle);

  DiffusionConfig cfg;
  cfg.sampler = sampler_from_string(sampler);
  cfg.n_steps = steps;
  cfg.n_chains = chains;
  cfg.step_size = step_size;
  const auto chains_out = simulate_ensemble(target, cfg, seed, &oracle);

  const auto blocks = pooled_states(chains_out);
  const auto radius = estimate_quantile_radius(blocks, spec.theta_star, 0.1);
  const auto moment = estimate_moment_radius(blocks, spec.theta_star, 2.0);
  double acc = 0;
  for (const auto& c : chains_out) acc += c.acceptance_rate;
  acc /= static_cast<double>(chains_out.size());
  const VectorXd rhat = split_chain_diagnostic(blocks);

  std::printf("model=%s n=%ld d=%d sampler=%s chains=%d steps=%ld h=%.6g\n",
              to_string(spec.kind), n, d, to_string(cfg.sampler), chains, steps,
              chains_out.front().step_size_used);
  std::printf("acceptance=%.3f  rho(delta=0.1)=%.6g (+-%.2g)  moment2=%.6g  max-Rhat=%.4f\n",
              acc, radius.rho, radius.mc_stderr, moment.rho, rhat.maxCoeff());
  if (!out.empty()) {
    for (std::size_t i = 0; i < chains_out.size(); ++i)
      write_trajectory(chains_out[i], out + ".chain" + std::to_string(i));
    write_dataset(spec, *data, out + ".data");
    std::printf("wrote %s.chain*.csv and %s.data.csv\n", out.c_str(), out.c_str());
  }
  return 0;
}

int cmd_solve_rate(const std::string& profile_name, const std::string& profile_file, double n,
                   int d, int p, double delta, double B) {
  RateProfile prof;
  if (!profile_file.empty()) {
    nlohmann::json j;
    std::ifstream f(profile_file);
    if (!f) throw config_error("cannot read profile file " + profile_file);
    f >> j;
    prof = profile_from_json(j);
  } else {
    prof = build_profile(profile_name, n, p);
  }
  const double eps = prof.name == "gmm" ? epsilon_gmm(d, n, delta) : epsilon_special(d, n, delta);
  const double k = rate_const_term(B, d, n, delta);
  const auto sol = solve_rate_equation(prof, eps, k);
  std::printf("profile=%s  n=%g d=%d delta=%g B=%g\n", prof.name.c_str(), n, d, delta, B);
  std::printf("epsilon=%.9g  const_term=%.9g\n", eps, k);
  std::printf("z* = %.12g   residual = %.3g   iterations = %d\n", sol.z_star, sol.residual,
              sol.iterations);
  if (prof.name == "logistic")
    std::printf("corollary bound (alpha=2, beta=0): %.6g\n",
                corollary_bound(2, 0, d, n, delta, B).value);
  else if (prof.name == "single-index")
    std::printf("corollary bound (alpha=%d, beta=%d): %.6g\n", 2 * p, p - 1,
                corollary_bound(2.0 * p, p - 1.0, d, n, delta, B).value);
  else if (prof.name == "gmm")
    std::printf("corollary bound (alpha=4, beta=1): %.6g\n",
                corollary_bound(4, 1, d, n, delta, B).value);
  return 0;
}

double delta_default() { return 0.1; }

int cmd_check_assumptions(const std::string& model, double n, int d, int p,
                          std::uint64_t seed) {
  const ModelKind kind = model_kind_from_string(model);
  RateProfile prof;
  if (kind == ModelKind::GaussianLocation) {
    prof.name = "gaussian-s1";
    prof.psi = {{0.0, std::numeric_limits<double>::infinity(), BranchKind::Power, 1.0, 2.0}};
    prof.zeta = {{0.0, std::numeric_limits<double>::infinity(), BranchKind::Power, 1.0, 0.0}};
    prof.validate();
  } else {
    prof = build_profile(model, n, p);
  }

  std::vector<double> grid;
  for (int i = 0; i <= 120; ++i) grid.push_back(std::pow(10.0, -3.0 + 6.0 * i / 120.0));
  const auto w3 = check_w3(prof, grid);
  std::printf("W.3 on %s over r in [1e-3, 1e3]: %s (%zu records", prof.name.c_str(),
              w3.all_passed() ? "PASS" : "FLAGGED", w3.records.size());
  const auto failures = w3.failures();
  std::printf(", %zu failures)\n", failures.size());
  std::map<std::string, int> by_kind;
  for (const auto& f : failures) ++by_kind[f.inequality];
  for (const auto& [ineq, count] : by_kind) {
    std::printf("  violated %d times: %s\n", count, ineq.c_str());
  }
  for (const auto& note : w3.notes) std::printf("  note: %s\n", note.c_str());

  const double eps = kind == ModelKind::OverspecGmm ? epsilon_gmm(d, n, delta_default())
                                                    : epsilon_special(d, n, delta_default());
  const auto w4 = check_w4(prof, eps);
  std::printf("W.4: epsilon=%.6g < liminf estimate %.6g ? %s (ratios monotone: %s)\n", eps,
              w4.liminf_estimate, w4.ok ? "yes" : "NO", w4.monotone ? "yes" : "NO");

  ConcavityCheckConfig ccfg;
  ccfg.seed = seed;
  if (kind == ModelKind::Logistic) ccfg.max_radius = 2.0;
  if (kind == ModelKind::SingleIndex || kind == ModelKind::GaussianLocation)
    ccfg.max_radius = 3.0;
  const ModelSpec spec = build_spec(model, d, p);
  const auto w1 = check_weak_concavity(spec, prof, ccfg);
  std::printf("W.1/S.1 margins over %zu probes: %s%s\n", w1.records.size(),
              w1.all_passed() ? "PASS" : "FAIL",
              w1.any_inconclusive() ? " (some inconclusive: MC noise)" : "");
  for (const auto& [name, value] : w1.constants)
    std::printf("  %s = %.6g\n", name.c_str(), value);
  if (kind == ModelKind::Logistic)
    std::printf("  (margins compare against the conventional c1 = 1 profile; the model's own\n"
                "   constant is the estimate c1_hat, and c1_hat > 0 is the meaningful check)\n");
  return 0;
}

int cmd_perturbation(const std::string& model, const std::string& n_grid_s,
                     const std::string& r_grid_s, int d, int p, long probes,
                     std::uint64_t seed, const std::string& out) {
  const auto n_grid = detail::parse_long_list(n_grid_s);
  const auto r_grid = parse_r_grid(r_grid_s);
  if (n_grid.empty() || r_grid.empty()) throw config_error("perturbation: empty grid");
  const ModelSpec base = build_spec(model, d, p);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw config_error("cannot write " + out);
    os = &file;
  }
  (*os) << "n,r,value,probes,seed\n";
  for (long n : n_grid) {
    const Dataset data = generate_dataset(base, n, derive_stream(seed, n, 0xDA));
    for (double r : r_grid) {
      PopulationConfig pop;
      pop.seed = seed;
      const auto est = estimate_sup_deviation(base, data, r, probes, seed, pop);
      (*os) << n << "," << detail::fmt_double(r) << "," << detail::fmt_double(est.value) << ","
            << est.probes << "," << est.seed << "\n";
    }
  }
  return 0;
}

int cmd_scaling(const std::string& config_path) {
  std::ifstream f(config_path);
  if (!f) throw config_error("cannot read config " + config_path);
  StudyConfig cfg = parse_study_config(f);
  if (cfg.output_dir.empty()) throw config_error("config must set output_dir");
  StudyLock lock(cfg.output_dir);
  const ScalingTable table = run_scaling_study(cfg);
  std::vector<ExponentFit> fits;
  try {
    fits.push_back(fit_rate_exponent(table));
  } catch (const estimation_error& e) {
    std::fprintf(stderr, "exponent fit skipped: %s\n", e.what());
  }
  emit_report(table, fits, cfg.output_dir);
  for (const auto& fit : fits)
    std::printf("axis=%s slope=%.4f +- %.4f (r^2=%.4f, %d cells)\n",
                to_string(cfg.axis), fit.slope, fit.stderr_value, fit.r_squared, fit.cells_used);
  for (const auto& c : table.cells) {
    std::printf("  %s=%-7ld median_rho=%-10.5g flagged=%d failed=%d%s\n",
                to_string(cfg.axis), c.axis_value, c.median_rho, c.flagged_trials,
                c.failed_trials, c.excluded ? " [excluded]" : "");
  }
  return table.any_cell_failed() ? 1 : 0;
}

int cmd_report(const std::string& config_path, const std::string& dir) {
  std::ifstream f(config_path);
  if (!f) throw config_error("cannot read config " + config_path);
  const StudyConfig cfg = parse_study_config(f);
  const ScalingTable table = load_report(cfg, dir);
  std::vector<ExponentFit> fits;
  fits.push_back(fit_rate_exponent(table));
  emit_report(table, fits, dir);
  std::printf("reloaded %zu rows, %zu cells; slope=%.4f +- %.4f\n", table.rows.size(),
              table.cells.size(), fits[0].slope, fits[0].stderr_value);
  return table.any_cell_failed() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"posterior contraction laboratory"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // simulate
  std::string model = "gaussian", sampler = "mala", out;
  long n = 1000, steps = 20000, probes = 512;
  int d = 3, p = 2, chains = 8;
  double step_size = 0, prior_sigma = 10.0, delta = 0.1, B = 0;
  std::uint64_t seed = 1;

  auto* sim = app.add_subcommand("simulate", "run posterior diffusion chains");
  sim->add_option("--model", model, "logistic|single-index|gmm|gaussian");
  sim->add_option("--n", n, "sample count");
  sim->add_option("--d", d, "dimension");
  sim->add_option("--p", p, "single-index degree");
  sim->add_option("--sampler", sampler, "ula|mala");
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--steps", steps, "steps per chain");
  sim->add_option("--chains", chains, "number of chains");
  sim->add_option("--step-size", step_size, "step size (0 = auto-tune)");
  sim->add_option("--prior-sigma", prior_sigma, "prior scale");
  sim->add_option("--out", out, "output basename for trajectory/dataset files");

  // solve-rate
  std::string profile = "gmm", profile_file;
  auto* solve = app.add_subcommand("solve-rate", "solve the contraction rate equation");
  solve->add_option("--profile", profile, "logistic|single-index|gmm");
  solve->add_option("--profile-file", profile_file, "JSON profile document");
  solve->add_option("--n", n, "sample count");
  solve->add_option("--d", d, "dimension");
  solve->add_option("--p", p, "single-index degree");
  solve->add_option("--delta", delta, "tail mass");
  solve->add_option("--B", B, "prior concentration constant");

  // check-assumptions
  auto* check = app.add_subcommand("check-assumptions", "numeric checks of W.1/W.3/W.4, S.1");
  check->add_option("--model", model, "logistic|single-index|gmm|gaussian");
  check->add_option("--n", n, "sample count entering zeta/epsilon");
  check->add_option("--d", d, "dimension");
  check->add_option("--p", p, "single-index degree");
  check->add_option("--seed", seed, "probe seed");

  // perturbation
  std::string n_grid = "500,2000,8000", r_grid = "0.1:1.6:8";
  auto* pert = app.add_subcommand("perturbation", "sup-deviation estimates over (n, r)");
  pert->add_option("--model", model, "logistic|single-index|gmm|gaussian");
  pert->add_option("--n-grid", n_grid, "comma list of sample sizes");
  pert->add_option("--r-grid", r_grid, "lo:hi:count or comma list");
  pert->add_option("--d", d, "dimension");
  pert->add_option("--p", p, "single-index degree");
  pert->add_option("--probes", probes, "interior probe count");
  pert->add_option("--seed", seed, "probe seed");
  pert->add_option("--out", out, "CSV output path (default stdout)");

  // scaling
  std::string config_path, report_dir;
  auto* scal = app.add_subcommand("scaling", "run a scaling study from a config file");
  scal->add_option("--config", config_path, "study config file")->required();

  // report
  auto* rep = app.add_subcommand("report", "reload a study directory and refresh fits");
  rep->add_option("--config", config_path, "study config file")->required();
  rep->add_option("--dir", report_dir, "study directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (sim->parsed())
      return cmd_simulate(model, n, d, p, sampler, seed, steps, chains, step_size, prior_sigma,
                          out);
    if (solve->parsed()) return cmd_solve_rate(profile, profile_file, n, d, p, delta, B);
    if (check->parsed()) return cmd_check_assumptions(model, n, d, p, seed);
    if (pert->parsed())
      return cmd_perturbation(model, n_grid, r_grid, d, p, probes, seed, out);
    if (scal->parsed()) return cmd_scaling(config_path);
    if (rep->parsed()) return cmd_report(config_path, report_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
