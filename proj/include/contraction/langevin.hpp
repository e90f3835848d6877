#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "contraction/errors.hpp"
#include "contraction/oracle.hpp"
#include "contraction/pool.hpp"
#include "contraction/rng.hpp"
#include "contraction/stats.hpp"

namespace contraction {

enum class Sampler { Ula, Mala };

inline const char* to_string(Sampler s) { return s == Sampler::Ula ? "ula" : "mala"; }
inline Sampler sampler_from_string(const std::string& s) {
  if (s == "ula") return Sampler::Ula;
  if (s == "mala") return Sampler::Mala;
  throw config_error("unknown sampler: " + s);
}

enum class ChainInit { AtThetaStar, FromPrior, Explicit };

/// Discretization settings for the posterior diffusion
///   d theta = (1/2 grad F_n + 1/(2n) grad log pi) dt + (1/sqrt(n)) dB.
///
/// step_size 0 requests auto-tuning; inverse_temperature 0 defaults to n
/// (the SDE noise scale 1/sqrt(n)); burn_in -1 defaults to n_steps/2.
struct DiffusionConfig {
  double step_size = 0;
  long n_steps = 20000;
  long burn_in = -1;
  int n_chains = 8;
  Sampler sampler = Sampler::Mala;
  double inverse_temperature = 0;
  ChainInit init = ChainInit::AtThetaStar;
  VectorXd init_value;
  long thinning = 1;

  long resolved_burn_in() const { return burn_in < 0 ? n_steps / 2 : burn_in; }

  void validate() const {
    if (step_size < 0) throw config_error("DiffusionConfig: step_size must be >= 0");
    if (n_steps < 1) throw config_error("DiffusionConfig: n_steps must be >= 1");
    if (resolved_burn_in() >= n_steps)
      throw config_error("DiffusionConfig: burn_in must be < n_steps");
    if (n_chains < 1) throw config_error("DiffusionConfig: n_chains must be >= 1");
    if (inverse_temperature < 0)
      throw config_error("DiffusionConfig: inverse_temperature must be positive");
    if (thinning < 1) throw config_error("DiffusionConfig: thinning must be >= 1");
    if (init == ChainInit::Explicit && init_value.size() == 0)
      throw config_error("DiffusionConfig: explicit init needs a vector");
  }

  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv1a(&step_size, sizeof(step_size));
    h = fnv1a(&n_steps, sizeof(n_steps), h);
    const long b = resolved_burn_in();
    h = fnv1a(&b, sizeof(b), h);
    h = fnv1a(&n_chains, sizeof(n_chains), h);
    h = fnv1a(&sampler, sizeof(sampler), h);
    h = fnv1a(&inverse_temperature, sizeof(inverse_temperature), h);
    h = fnv1a(&init, sizeof(init), h);
    if (init_value.size())
      h = fnv1a(init_value.data(), sizeof(double) * init_value.size(), h);
    h = fnv1a(&thinning, sizeof(thinning), h);
    return h;
  }
};

/// Drift + unnormalized log-density pair driving one diffusion. n_scale is
/// the sample count n entering the noise scale 1/sqrt(n).
struct SdeTarget {
  std::function<VectorXd(const VectorXd&)> drift;
  // log density (n F_n + log pi) together with the drift; required for MALA.
  std::function<std::pair<double, VectorXd>(const VectorXd&)> log_target_and_drift;
  int dim = 0;
  double n_scale = 1;
  VectorXd theta_star;
};

inline SdeTarget make_sde_target(const GradOracle& oracle) {
  if (oracle.mode() != EvalMode::PosteriorDrift)
    throw config_error("make_sde_target: oracle must be in posterior drift mode");
  SdeTarget t;
  t.dim = oracle.dim();
  t.n_scale = static_cast<double>(oracle.sample_count());
  t.theta_star = oracle.spec().theta_star;
  t.drift = [oracle](const VectorXd& x) { return oracle.grad(x); };
  t.log_target_and_drift = [oracle](const VectorXd& x) { return oracle.log_target_and_drift(x); };
  return t;
}

/// One discretized chain. states holds every thinning-th state, so
/// n_steps/thinning rows; burn_in_rows of them are pre-stationary.
struct Trajectory {
  MatrixXd states;
  double acceptance_rate = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t config_fingerprint = 0;
  double step_size_used = 0;
  Sampler sampler = Sampler::Mala;
  int low_acceptance_windows = 0;  // 1000-step windows with MALA acceptance < 1%
  long burn_in_rows = 0;

  /// Post-burn-in block of states.
  MatrixXd kept() const {
    return states.bottomRows(states.rows() - burn_in_rows);
  }
};

namespace detail {

inline VectorXd chain_start(const SdeTarget& target, const DiffusionConfig& cfg,
                            const GradOracle* oracle, PhiloxRng& rng) {
  switch (cfg.init) {
    case ChainInit::AtThetaStar:
      if (target.theta_star.size() != target.dim)
        throw config_error("AtThetaStar init requires the target's theta_star");
      return target.theta_star;
    case ChainInit::Explicit:
      if (cfg.init_value.size() != target.dim)
        throw config_error("explicit init has wrong dimension");
      return cfg.init_value;
    case ChainInit::FromPrior: {
      if (!oracle || !oracle->prior())
        throw config_error("FromPrior init requires a prior");
      VectorXd x(target.dim);
      for (int j = 0; j < target.dim; ++j) x(j) = rng.normal();
      return oracle->prior()->mean + oracle->prior()->sigma * x;
    }
  }
  throw config_error("unknown chain init");
}

}  // namespace detail

/// Runs one chain. ULA update: theta' = theta + h*drift + sqrt(h/beta)*xi.
/// MALA uses the same proposal plus a Metropolis-Hastings correction whose
/// stationary density is proportional to exp((beta/n)(n F_n + log pi)).
/// Aborts with the step index if a state goes non-finite.
inline Trajectory simulate_chain(const SdeTarget& target, const DiffusionConfig& cfg,
                                 std::uint64_t seed, const GradOracle* oracle = nullptr) {
  cfg.validate();
  if (cfg.step_size <= 0)
    throw config_error("simulate_chain: step_size must be resolved (>0); use simulate_ensemble "
                       "or tune_step_size for automatic selection");
  const double beta = cfg.inverse_temperature > 0 ? cfg.inverse_temperature : target.n_scale;
  const double h = cfg.step_size;
  const double noise_sd = std::sqrt(h / beta);
  const bool mala = cfg.sampler == Sampler::Mala;
  const double target_scale = beta / target.n_scale;  // rescales log density for beta != n
  if (mala && !target.log_target_and_drift)
    throw config_error("MALA requires a log-density evaluator on the target");

  PhiloxRng rng(seed, 0xC4A17ULL);
  VectorXd theta = detail::chain_start(target, cfg, oracle, rng);

  Trajectory traj;
  traj.seed = seed;
  traj.config_fingerprint = cfg.fingerprint();
  traj.step_size_used = h;
  traj.sampler = cfg.sampler;
  traj.burn_in_rows = cfg.resolved_burn_in() / cfg.thinning;
  const long rows = cfg.n_steps / cfg.thinning;
  traj.states.resize(rows, target.dim);

  double cur_log = 0;
  VectorXd cur_drift;
  if (mala) {
    auto [l, g] = target.log_target_and_drift(theta);
    cur_log = l;
    cur_drift = g;
  } else {
    cur_drift = target.drift(theta);
  }

  long accepts = 0, row = 0;
  long window_accepts = 0, window_len = 0;
  VectorXd xi(target.dim), proposal(target.dim);
  for (long k = 1; k <= cfg.n_steps; ++k) {
    for (int j = 0; j < target.dim; ++j) xi(j) = rng.normal();
    proposal = theta + h * cur_drift + noise_sd * xi;
    if (!proposal.allFinite()) {
      throw numeric_error("chain diverged at step " + std::to_string(k) +
                              "; last finite state norm " + std::to_string(theta.norm()),
                          k);
    }
    if (mala) {
      auto [prop_log, prop_drift] = target.log_target_and_drift(proposal);
      // log q(a|b) = -beta/(2h) ||a - b - h drift(b)||^2
      const double fwd = (proposal - theta - h * cur_drift).squaredNorm();
      const double bwd = (theta - proposal - h * prop_drift).squaredNorm();
      const double log_alpha =
          target_scale * (prop_log - cur_log) + (beta / (2.0 * h)) * (fwd - bwd);
      ++window_len;
      if (std::log(rng.uniform()) < log_alpha) {
        theta.swap(proposal);
        cur_log = prop_log;
        cur_drift.swap(prop_drift);
        ++accepts;
        ++window_accepts;
      }
      if (window_len == 1000) {
        if (window_accepts < 10) ++traj.low_acceptance_windows;
        window_len = window_accepts = 0;
      }
    } else {
      theta.swap(proposal);
      cur_drift = target.drift(theta);
      ++accepts;
    }
    if (k % cfg.thinning == 0 && row < rows) traj.states.row(row++) = theta.transpose();
  }
  traj.acceptance_rate =
      mala ? static_cast<double>(accepts) / static_cast<double>(cfg.n_steps) : 1.0;
  return traj;
}

/// Picks a step size: h0 = 0.5/(beta (1 + Lhat)) with Lhat the largest drift
/// difference ratio over 100 finite-difference probes around the start point,
/// then one monotone halving/doubling sweep of 200-step MALA pilots until the
/// acceptance rate lands in [0.4, 0.8]. Deterministic given the seed.
inline double tune_step_size(const SdeTarget& target, const DiffusionConfig& cfg,
                             std::uint64_t seed, const GradOracle* oracle = nullptr) {
  const double beta = cfg.inverse_temperature > 0 ? cfg.inverse_temperature : target.n_scale;
  PhiloxRng probe_rng(seed, 0x9087ULL);
  VectorXd theta0 = detail::chain_start(target, cfg, oracle, probe_rng);

  const VectorXd g0 = target.drift(theta0);
  const double step = 0.01 * (1.0 + theta0.norm());
  double lipschitz = 0;
  VectorXd u(target.dim);
  for (int k = 0; k < 100; ++k) {
    for (int j = 0; j < target.dim; ++j) u(j) = probe_rng.normal();
    const double norm = u.norm();
    if (norm == 0) continue;
    const VectorXd g1 = target.drift(theta0 + (step / norm) * u);
    lipschitz = std::max(lipschitz, (g1 - g0).norm() / step);
  }
  double h = 0.5 / (beta * (1.0 + lipschitz));

  if (!target.log_target_and_drift) return h;
  auto pilot = [&](double trial_h) {
    DiffusionConfig pcfg = cfg;
    pcfg.step_size = trial_h;
    pcfg.n_steps = 200;
    pcfg.burn_in = 0;
    pcfg.n_chains = 1;
    pcfg.sampler = Sampler::Mala;
    pcfg.thinning = 1;
    return simulate_chain(target, pcfg, derive_stream(seed, 0x9107ULL), oracle).acceptance_rate;
  };
  double acc = pilot(h);
  if (acc > 0.8) {
    for (int i = 0; i < 60 && acc > 0.8; ++i) {
      h *= 2;
      acc = pilot(h);
    }
    if (acc < 0.4) h /= 1.4142135623730951;  // overshot the band in one doubling
  } else if (acc < 0.4) {
    for (int i = 0; i < 60 && acc < 0.4; ++i) {
      h /= 2;
      acc = pilot(h);
    }
    if (acc > 0.8) h *= 1.4142135623730951;
  }
  return h;
}

/// Tunes once, then runs cfg.n_chains chains with per-chain Philox streams
/// derived from (master_seed, chain index). Chains may execute in parallel;
/// the result is identical for any worker count.
inline std::vector<Trajectory> simulate_ensemble(const SdeTarget& target,
                                                 const DiffusionConfig& cfg,
                                                 std::uint64_t master_seed,
                                                 const GradOracle* oracle = nullptr) {
  cfg.validate();
  DiffusionConfig run_cfg = cfg;
  if (run_cfg.step_size <= 0)
    run_cfg.step_size = tune_step_size(target, cfg, derive_stream(master_seed, 0x7E57ULL), oracle);
  std::vector<Trajectory> out(static_cast<std::size_t>(cfg.n_chains));
  parallel_for(out.size(), [&](std::size_t i) {
    out[i] = simulate_chain(target, run_cfg,
                            derive_stream(master_seed, static_cast<std::uint64_t>(i), 0xC4A1ULL),
                            oracle);
  });
  return out;
}

/// Post-burn-in blocks, one per chain.
inline std::vector<MatrixXd> pooled_states(const std::vector<Trajectory>& chains) {
  std::vector<MatrixXd> blocks;
  blocks.reserve(chains.size());
  for (const auto& c : chains) blocks.push_back(c.kept());
  return blocks;
}

enum class RadiusMethod { Quantile, Moment };

/// Contraction-radius estimate: the rho with empirical posterior mass delta
/// outside the ball B(theta_star, rho), or a moment proxy.
struct RadiusEstimate {
  double rho = 0;
  double delta = 0;
  RadiusMethod method = RadiusMethod::Quantile;
  double moment_p = 0;
  double mc_stderr = 0;
};

namespace detail {

inline std::vector<std::vector<double>> block_distances(const std::vector<MatrixXd>& blocks,
                                                        const VectorXd& theta_star) {
  std::vector<std::vector<double>> d(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].cols() != theta_star.size())
      throw config_error("radius estimate: dimension mismatch");
    d[b].resize(static_cast<std::size_t>(blocks[b].rows()));
    for (long i = 0; i < blocks[b].rows(); ++i)
      d[b][static_cast<std::size_t>(i)] = (blocks[b].row(i).transpose() - theta_star).norm();
  }
  return d;
}

/// Chain-level bootstrap: resample whole chains with replacement, recompute
/// the statistic on the pooled resample, report the spread.
template <typename Stat>
double chain_bootstrap_stderr(const std::vector<std::vector<double>>& per_chain, Stat&& stat,
                              int resamples = 200) {
  if (per_chain.size() < 2) return 0.0;
  PhiloxRng rng(0xB007ULL, per_chain.size());
  std::vector<double> stats;
  stats.reserve(resamples);
  std::vector<double> pooled;
  for (int r = 0; r < resamples; ++r) {
    pooled.clear();
    for (std::size_t k = 0; k < per_chain.size(); ++k) {
      const auto pick = static_cast<std::size_t>(rng.uniform_co() * per_chain.size());
      const auto& src = per_chain[pick < per_chain.size() ? pick : per_chain.size() - 1];
      pooled.insert(pooled.end(), src.begin(), src.end());
    }
    stats.push_back(stat(pooled));
  }
  return std::sqrt(sample_variance(stats));
}

}  // namespace detail

/// rho = empirical (1-delta)-quantile of ||theta_i - theta_star|| with the
/// lower order-statistic convention; stderr by 200-resample chain bootstrap.
inline RadiusEstimate estimate_quantile_radius(const std::vector<MatrixXd>& blocks,
                                               const VectorXd& theta_star, double delta) {
  if (!(delta > 0 && delta <= 0.5))
    throw config_error("quantile radius: delta must lie in (0, 0.5]");
  auto per_chain = detail::block_distances(blocks, theta_star);
  std::size_t total = 0;
  for (const auto& c : per_chain) total += c.size();
  const auto needed = static_cast<std::size_t>(std::ceil(10.0 / delta));
  if (total < needed)
    throw estimation_error("quantile radius needs at least " + std::to_string(needed) +
                           " samples, got " + std::to_string(total));
  std::vector<double> pooled;
  pooled.reserve(total);
  for (const auto& c : per_chain) pooled.insert(pooled.end(), c.begin(), c.end());

  RadiusEstimate est;
  est.method = RadiusMethod::Quantile;
  est.delta = delta;
  est.rho = lower_quantile(pooled, delta);
  est.mc_stderr = detail::chain_bootstrap_stderr(
      per_chain, [delta](const std::vector<double>& v) { return lower_quantile(v, delta); });
  return est;
}

/// (mean ||theta_i - theta_star||^p)^(1/p), accumulated in the log domain.
inline RadiusEstimate estimate_moment_radius(const std::vector<MatrixXd>& blocks,
                                             const VectorXd& theta_star, double p) {
  if (!(p >= 1)) throw config_error("moment radius: p must be >= 1");
  auto per_chain = detail::block_distances(blocks, theta_star);
  std::vector<double> pooled;
  for (const auto& c : per_chain) pooled.insert(pooled.end(), c.begin(), c.end());
  if (pooled.empty()) throw estimation_error("moment radius: empty sample");

  RadiusEstimate est;
  est.method = RadiusMethod::Moment;
  est.moment_p = p;
  est.rho = power_mean(pooled, p);
  est.mc_stderr = detail::chain_bootstrap_stderr(
      per_chain, [p](const std::vector<double>& v) { return power_mean(v, p); });
  return est;
}

/// Split-chain potential scale reduction per coordinate. Each chain is split
/// in half; between/within variances combine in the classic estimator.
/// Degenerate-variance convention: a coordinate whose whole-chain means are
/// all equal (or whose within variance vanishes) reports exactly 1.
inline VectorXd split_chain_diagnostic(const std::vector<MatrixXd>& blocks) {
  if (blocks.size() < 2) throw config_error("split-chain diagnostic needs >= 2 chains");
  const long rows = blocks.front().rows();
  const long dim = blocks.front().cols();
  for (const auto& b : blocks)
    if (b.rows() != rows || b.cols() != dim)
      throw config_error("split-chain diagnostic: chains must have equal shapes");
  const long half = rows / 2;
  if (half < 2) throw config_error("split-chain diagnostic: chains too short to split");

  VectorXd rhat(dim);
  for (long j = 0; j < dim; ++j) {
    std::vector<double> chain_means;
    for (const auto& b : blocks) chain_means.push_back(b.col(j).mean());
    const double spread =
        *std::max_element(chain_means.begin(), chain_means.end()) -
        *std::min_element(chain_means.begin(), chain_means.end());
    double scale = 0;
    for (double m : chain_means) scale = std::max(scale, std::abs(m));
    if (spread <= 1e-15 * (1.0 + scale)) {
      rhat(j) = 1.0;
      continue;
    }
    std::vector<double> means, vars;
    for (const auto& b : blocks) {
      for (int s = 0; s < 2; ++s) {
        const auto seg = b.col(j).segment(s * half, half);
        const double m = seg.mean();
        means.push_back(m);
        vars.push_back((seg.array() - m).square().sum() / static_cast<double>(half - 1));
      }
    }
    const double w = mean(vars);
    if (w <= 0) {
      rhat(j) = 1.0;
      continue;
    }
    const double b_over_len = sample_variance(means);  // B/len
    const double len = static_cast<double>(half);
    const double var_plus = (len - 1.0) / len * w + b_over_len;
    rhat(j) = std::sqrt(var_plus / w);
  }
  return rhat;
}

}  // namespace contraction
