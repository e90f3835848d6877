#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "contraction/models.hpp"
#include "contraction/rate.hpp"
#include "contraction/rng.hpp"
#include "contraction/stats.hpp"

namespace contraction {

/// Probe-based lower bound on sup_{B(theta*, r)} ||grad F_n - grad F||.
/// value is a max over evaluated points, so it never exceeds the true sup.
struct DeviationEstimate {
  double r = 0;
  double value = 0;
  VectorXd argmax_theta;
  long probes = 0;     // points evaluated, ascent included
  std::uint64_t seed = 0;
  double stderr_proxy = 0;  // spread of per-batch maxima
  long n = 0;          // sample count of the dataset probed
};

namespace detail {

struct DeviationField {
  const ModelSpec* spec;
  const Dataset* data;
  PopulationConfig pop;
  double operator()(const VectorXd& theta) const {
    return (sample_loglik_grad(*spec, *data, theta) - population_grad(*spec, theta, pop)).norm();
  }
};

}  // namespace detail

/// Uniform ball probes plus boundary probes plus 20 projected-ascent steps
/// from the best early probe. Interior and boundary points come from separate
/// Philox substreams and the ascent starts from the best of the first
/// min(probes, 512) interior plus boundary points, so enlarging the probe
/// budget evaluates a superset and the estimate is monotone in it.
inline DeviationEstimate estimate_sup_deviation(const ModelSpec& spec, const Dataset& data,
                                                double r, long probes, std::uint64_t seed,
                                                const PopulationConfig& pop = {}) {
  if (r < 0) throw std::domain_error("estimate_sup_deviation: r must be >= 0");
  if (probes < 1) throw config_error("estimate_sup_deviation: needs at least one probe");
  detail::DeviationField dev{&spec, &data, pop};

  DeviationEstimate est;
  est.r = r;
  est.seed = seed;
  est.n = data.n;

  if (r == 0) {
    est.argmax_theta = spec.theta_star;
    est.value = dev(spec.theta_star);
    est.probes = 1;
    return est;
  }

  PhiloxRng interior(seed, 0xA11ULL);
  PhiloxRng boundary(seed, 0xB0DULL);
  VectorXd u(spec.d);
  auto sphere_point = [&](PhiloxRng& rng) -> VectorXd {
    for (int j = 0; j < spec.d; ++j) u(j) = rng.normal();
    const double norm = u.norm();
    if (norm == 0) return VectorXd::Unit(spec.d, 0);
    return u / norm;
  };

  double best = -1;
  VectorXd best_theta = spec.theta_star;
  const long early_cut = std::min<long>(probes, 512);
  double early_best = -1;
  VectorXd early_theta = spec.theta_star;
  std::vector<double> batch_max;
  double cur_batch = -1;
  const long batch = std::max<long>(1, probes / 8);

  long evaluated = 0;
  auto consider = [&](const VectorXd& theta, bool early_eligible) {
    const double v = dev(theta);
    ++evaluated;
    if (v > best) {
      best = v;
      best_theta = theta;
    }
    if (early_eligible && v > early_best) {
      early_best = v;
      early_theta = theta;
    }
    return v;
  };

  for (long i = 0; i < probes; ++i) {
    const VectorXd dir = sphere_point(interior);
    const double radius = r * std::pow(interior.uniform(), 1.0 / spec.d);
    const double v = consider(spec.theta_star + radius * dir, i < early_cut);
    cur_batch = std::max(cur_batch, v);
    if ((i + 1) % batch == 0) {
      batch_max.push_back(cur_batch);
      cur_batch = -1;
    }
  }
  for (int i = 0; i < 64; ++i) consider(spec.theta_star + r * sphere_point(boundary), true);

  // Projected gradient ascent on the squared deviation, finite differences.
  VectorXd theta = early_theta;
  double eta = r / 10.0;
  double cur = dev(theta);
  const double fd = 1e-5;
  for (int step = 0; step < 20; ++step) {
    VectorXd g(spec.d);
    const double h = fd * (1.0 + theta.norm());
    for (int j = 0; j < spec.d; ++j) {
      VectorXd tp = theta, tm = theta;
      tp(j) += h;
      tm(j) -= h;
      const double vp = dev(tp), vm = dev(tm);
      g(j) = (vp * vp - vm * vm) / (2 * h);
      evaluated += 2;
    }
    const double gn = g.norm();
    if (gn == 0) break;
    VectorXd cand = theta + (eta / gn) * g;
    const VectorXd off = cand - spec.theta_star;
    if (off.norm() > r) cand = spec.theta_star + (r / off.norm()) * off;
    const double v = consider(cand, false);
    if (v > cur) {
      theta = cand;
      cur = v;
    } else {
      eta *= 0.5;
    }
  }

  est.value = best;
  est.argmax_theta = best_theta;
  est.probes = evaluated;
  if (batch_max.size() >= 2) est.stderr_proxy = std::sqrt(sample_variance(batch_max));
  return est;
}

enum class EnvelopeKind { Affine, ZetaShaped };

/// Fitted perturbation envelope: eps1(n) r + eps2(n) for the strongly concave
/// route, eps(n) zeta(r) for the weakly concave one, plus the log-log slope
/// of the fitted level in n.
struct EnvelopeFit {
  EnvelopeKind kind = EnvelopeKind::Affine;
  std::vector<double> ns;       // distinct sample sizes, ascending
  std::vector<double> eps1;     // affine slope per n (affine kind)
  std::vector<double> eps2;     // affine offset per n (affine kind)
  std::vector<double> eps;      // zeta-shaped level per n (zeta kind)
  LineFit n_scaling;            // slope of log(level) vs log(n)
  std::string slope_source;     // which level the slope was fit on
  std::vector<double> residuals;  // envelope - value per input row
  double slack = 1;             // max value/envelope over the grid, floored at 1

  double envelope_at(double n_value, double r, const RateProfile* prof) const {
    for (std::size_t i = 0; i < ns.size(); ++i) {
      if (ns[i] == n_value) {
        if (kind == EnvelopeKind::Affine) return eps1[i] * r + eps2[i];
        return eps[i] * prof->zeta_value_at_n(r, n_value);
      }
    }
    throw estimation_error("envelope_at: n not in fitted grid");
  }
};

enum class SlopeSource { Auto, Eps1, Eps2 };

/// Least-squares envelope fit over a (n, r) grid of deviation estimates.
/// Needs >= 3 distinct n spanning a decade and >= 4 radii per n.
inline EnvelopeFit fit_envelope(const std::vector<DeviationEstimate>& estimates,
                                EnvelopeKind kind,
                                const RateProfile* profile = nullptr,
                                SlopeSource slope_on = SlopeSource::Auto) {
  if (kind == EnvelopeKind::ZetaShaped && profile == nullptr)
    throw config_error("fit_envelope: zeta-shaped fit needs a profile");
  std::vector<double> ns;
  for (const auto& e : estimates) ns.push_back(static_cast<double>(e.n));
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.size() < 3 || ns.back() < 10.0 * ns.front())
    throw config_error("fit_envelope: need >= 3 sample sizes spanning a decade");

  EnvelopeFit fit;
  fit.kind = kind;
  fit.ns = ns;
  for (double n : ns) {
    std::vector<double> rs, vals;
    for (const auto& e : estimates)
      if (static_cast<double>(e.n) == n) {
        rs.push_back(e.r);
        vals.push_back(e.value);
      }
    std::vector<double> uniq = rs;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < 4) throw config_error("fit_envelope: need >= 4 radii per sample size");
    if (kind == EnvelopeKind::Affine) {
      const LineFit lf = fit_line(rs, vals);
      fit.eps1.push_back(lf.slope);
      fit.eps2.push_back(lf.intercept);
    } else {
      double acc = 0;
      for (std::size_t i = 0; i < rs.size(); ++i)
        acc += vals[i] / profile->zeta_value_at_n(rs[i], n);
      fit.eps.push_back(acc / static_cast<double>(rs.size()));
    }
  }

  const std::vector<double>* level = nullptr;
  if (kind == EnvelopeKind::ZetaShaped) {
    level = &fit.eps;
    fit.slope_source = "eps";
  } else {
    const double eps2_scale =
        std::max(1e-300, *std::max_element(fit.eps2.begin(), fit.eps2.end()));
    const bool eps1_usable =
        slope_on == SlopeSource::Eps1 ||
        (slope_on == SlopeSource::Auto &&
         *std::min_element(fit.eps1.begin(), fit.eps1.end()) > 1e-9 * eps2_scale);
    level = eps1_usable ? &fit.eps1 : &fit.eps2;
    fit.slope_source = eps1_usable ? "eps1" : "eps2";
  }
  fit.n_scaling = loglog_fit(ns, *level);

  for (const auto& e : estimates) {
    const double env = fit.envelope_at(static_cast<double>(e.n), e.r, profile);
    fit.residuals.push_back(env - e.value);
    if (env > 0) fit.slack = std::max(fit.slack, e.value / env);
  }
  return fit;
}

}  // namespace contraction
