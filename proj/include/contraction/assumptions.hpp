#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "contraction/models.hpp"
#include "contraction/rate.hpp"
#include "contraction/rng.hpp"

namespace contraction {

/// One grid-point verdict; failures carry both sides of the inequality.
struct CheckRecord {
  std::string inequality;
  double r = 0;
  double lhs = 0;
  double rhs = 0;
  bool pass = true;
  bool inconclusive = false;
};

/// Outcome of a numeric assumption check: per-point verdicts, estimated
/// constants, and notes about skipped or inconclusive regions.
struct AssumptionReport {
  std::vector<CheckRecord> records;
  std::map<std::string, double> constants;  // mu_hat, c1_hat, L1_hat, ...
  std::optional<double> w4_liminf;
  std::vector<std::string> notes;

  bool all_passed() const {
    for (const auto& r : records)
      if (!r.pass && !r.inconclusive) return false;
    return true;
  }
  bool any_inconclusive() const {
    for (const auto& r : records)
      if (r.inconclusive) return true;
    return false;
  }
  std::vector<CheckRecord> failures() const {
    std::vector<CheckRecord> f;
    for (const auto& r : records)
      if (!r.pass && !r.inconclusive) f.push_back(r);
    return f;
  }
};

inline nlohmann::json report_to_json(const AssumptionReport& rep) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& r : rep.records)
    recs.push_back({{"inequality", r.inequality},
                    {"r", r.r},
                    {"lhs", r.lhs},
                    {"rhs", r.rhs},
                    {"pass", r.pass},
                    {"inconclusive", r.inconclusive}});
  nlohmann::json j{{"records", recs}, {"constants", rep.constants}, {"notes", rep.notes}};
  if (rep.w4_liminf) j["w4_liminf"] = *rep.w4_liminf;
  return j;
}

inline AssumptionReport report_from_json(const nlohmann::json& j) {
  AssumptionReport rep;
  for (const auto& e : j.at("records")) {
    CheckRecord r;
    r.inequality = e.at("inequality").get<std::string>();
    r.r = e.at("r").get<double>();
    r.lhs = e.at("lhs").get<double>();
    r.rhs = e.at("rhs").get<double>();
    r.pass = e.at("pass").get<bool>();
    r.inconclusive = e.at("inconclusive").get<bool>();
    rep.records.push_back(r);
  }
  rep.constants = j.at("constants").get<std::map<std::string, double>>();
  rep.notes = j.at("notes").get<std::vector<std::string>>();
  if (j.contains("w4_liminf")) rep.w4_liminf = j.at("w4_liminf").get<double>();
  return rep;
}

namespace detail {

/// Inverse of s -> s*zeta(s) by guarded bisection to 1e-13 relative.
inline double invert_r_zeta(const RateProfile& prof, double target) {
  if (target <= 0) return 0;
  double lo = 0, hi = 1;
  auto g = [&](double s) { return s * prof.zeta_value(s); };
  int guard = 0;
  while (g(hi) < target) {
    hi *= 2;
    if (++guard > 1100) throw numeric_error("invert_r_zeta: no bracket");
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-13 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) >= target ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

inline bool near_any(double r, const std::vector<double>& points, double half_width) {
  for (double b : points)
    if (std::abs(r - b) <= half_width * std::max(1.0, b)) return true;
  return false;
}

}  // namespace detail

/// Checks the two W.3 differential inequalities with exact branch derivatives
/// and the convexity of psi(xi(.)) by second divided differences. Grid cells
/// within relative half-width 1e-6 of a breakpoint are skipped (derivatives
/// at kinks would need a distributional reading); skips are noted.
/// Failures are data, not errors.
inline AssumptionReport check_w3(const RateProfile& prof, const std::vector<double>& r_grid) {
  AssumptionReport rep;
  std::vector<double> bps = prof.psi_breakpoints();
  for (double b : prof.zeta_breakpoints()) bps.push_back(b);
  std::sort(bps.begin(), bps.end());

  long skipped = 0;
  for (double r : r_grid) {
    if (!(r > 0)) throw config_error("check_w3: grid must be positive");
    if (detail::near_any(r, bps, 1e-6)) {
      ++skipped;
      continue;
    }
    const double psi = prof.psi_value(r), dpsi = prof.psi_deriv(r), d2psi = prof.psi_deriv2(r);
    const double zeta = prof.zeta_value(r), dzeta = prof.zeta_deriv(r),
                 d2zeta = prof.zeta_deriv2(r);
    {
      CheckRecord rec;
      rec.inequality = "w3.1: r psi' zeta >= r psi zeta' + psi zeta";
      rec.r = r;
      rec.lhs = r * dpsi * zeta;
      rec.rhs = r * psi * dzeta + psi * zeta;
      rec.pass = rec.lhs >= rec.rhs - 1e-9 * std::max({1.0, std::abs(rec.lhs), std::abs(rec.rhs)});
      rep.records.push_back(rec);
    }
    {
      CheckRecord rec;
      rec.inequality = "w3.2: r^2 psi'' zeta + r psi' zeta >= 3 psi zeta + r^2 psi zeta''";
      rec.r = r;
      rec.lhs = r * r * d2psi * zeta + r * dpsi * zeta;
      rec.rhs = 3.0 * psi * zeta + r * r * psi * d2zeta;
      rec.pass = rec.lhs >= rec.rhs - 1e-9 * std::max({1.0, std::abs(rec.lhs), std::abs(rec.rhs)});
      rep.records.push_back(rec);
    }
  }
  if (skipped > 0)
    rep.notes.push_back("skipped " + std::to_string(skipped) +
                        " breakpoint-adjacent grid cells (half-width 1e-6)");

  // Convexity of r -> psi(xi(r)) where xi inverts s -> s zeta(s). Breakpoint
  // images s_b * zeta(s_b) kink the composition, so straddling triples skip.
  std::vector<double> images;
  for (double b : bps) images.push_back(b * prof.zeta_value(b));
  std::vector<std::pair<double, double>> pts;
  for (double r : r_grid) {
    const double t = r * prof.zeta_value(r);  // probe the composition on the same grid scale
    if (detail::near_any(t, images, 1e-6)) continue;
    pts.emplace_back(t, prof.psi_value(detail::invert_r_zeta(prof, t)));
  }
  for (std::size_t i = 2; i < pts.size(); ++i) {
    const auto [x0, f0] = pts[i - 2];
    const auto [x1, f1] = pts[i - 1];
    const auto [x2, f2] = pts[i];
    bool straddles = false;
    for (double im : images)
      if (im > x0 && im < x2) straddles = true;
    if (straddles || x2 <= x0) continue;
    CheckRecord rec;
    rec.inequality = "w3.0: psi(xi(.)) convex";
    rec.r = x1;
    rec.lhs = ((f2 - f1) / (x2 - x1) - (f1 - f0) / (x1 - x0)) / (0.5 * (x2 - x0));
    rec.rhs = 0;
    rec.pass = rec.lhs >= -1e-7 * std::max(1.0, std::abs(f1)) / (x1 * x1) - 1e-300;
    rep.records.push_back(rec);
  }
  return rep;
}

/// Probe settings for the weak-concavity (W.1 / S.1) surface check.
struct ConcavityCheckConfig {
  std::vector<double> radii;      // default: log grid on [1e-2, sqrt(2)]
  int directions = 8;             // random directions per radius
  std::uint64_t seed = 0;
  PopulationConfig population;    // gradient oracle budget
  double max_radius = std::sqrt(2.0);
};

/// Samples theta = theta* + r u, evaluates <grad F(theta), theta* - theta>
/// against psi(||theta - theta*||), and reports margins plus the estimated
/// best constants (mu_hat for the S.1 quadratic shape, c1_hat for the W.1
/// shape psi/c1). Also estimates the Assumption A constant L1 from gradient
/// difference ratios. Monte Carlo paths whose standard error exceeds 10% of
/// the margin are marked inconclusive rather than failed.
inline AssumptionReport check_weak_concavity(const ModelSpec& spec, const RateProfile& prof,
                                             const ConcavityCheckConfig& cfg = {}) {
  AssumptionReport rep;
  std::vector<double> radii = cfg.radii;
  if (radii.empty()) {
    for (int i = 0; i <= 24; ++i)
      radii.push_back(std::pow(10.0, -2.0 + i * (std::log10(cfg.max_radius) + 2.0) / 24.0));
  }
  PhiloxRng rng(cfg.seed, derive_stream(spec.fingerprint(), 0x3EAC));
  VectorXd u(spec.d);

  double c1_hat = std::numeric_limits<double>::infinity();
  double mu_hat = std::numeric_limits<double>::infinity();
  double l1_hat = 0;
  VectorXd prev_theta;
  VectorXd prev_grad;

  const bool radial = spec.kind != ModelKind::Logistic;  // population grad depends on r only
  const int dirs = radial ? 1 : cfg.directions;

  for (double r : radii) {
    for (int k = 0; k < dirs; ++k) {
      for (int j = 0; j < spec.d; ++j) u(j) = rng.normal();
      if (u.norm() == 0) u(0) = 1;
      u /= u.norm();
      const VectorXd theta = spec.theta_star + r * u;
      const PopulationGrad pg = population_grad_detail(spec, theta, cfg.population);
      const double inner = pg.grad.dot(spec.theta_star - theta);
      const double psi = prof.psi_value(r);

      CheckRecord rec;
      rec.inequality = "w1: <grad F, theta*-theta> >= psi(r)";
      rec.r = r;
      rec.lhs = inner;
      rec.rhs = psi;
      const double margin = inner - psi;
      rec.pass = margin >= -1e-9 * (1.0 + std::abs(psi));
      // inner product stderr <= ||theta*-theta|| * grad stderr
      const double inner_se = pg.mc_stderr * r;
      if (!rec.pass && inner_se > 0.1 * std::abs(margin)) rec.inconclusive = true;
      rep.records.push_back(rec);

      if (psi > 0) c1_hat = std::min(c1_hat, inner / (psi / prof.c1));
      if (r > 0) mu_hat = std::min(mu_hat, inner / (r * r));
      if (prev_theta.size() == spec.d) {
        const double dist = (theta - prev_theta).norm();
        if (dist > 1e-12)
          l1_hat = std::max(l1_hat, (pg.grad - prev_grad).norm() / dist);
      }
      prev_theta = theta;
      prev_grad = pg.grad;
    }
  }
  if (std::isfinite(c1_hat)) rep.constants["c1_hat"] = c1_hat;
  if (std::isfinite(mu_hat)) rep.constants["mu_hat"] = mu_hat;
  rep.constants["L1_hat"] = l1_hat;
  if (spec.kind == ModelKind::Logistic)
    rep.notes.push_back("population gradients use seeded Monte Carlo; margins carry MC noise");
  return rep;
}

}  // namespace contraction
