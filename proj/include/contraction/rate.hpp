#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "contraction/errors.hpp"

namespace contraction {

enum class BranchKind { Power, QuadMinusOne, Linear };

inline const char* to_string(BranchKind k) {
  switch (k) {
    case BranchKind::Power: return "power";
    case BranchKind::QuadMinusOne: return "quad_minus_one";
    case BranchKind::Linear: return "linear";
  }
  return "?";
}

inline BranchKind branch_kind_from_string(const std::string& s) {
  if (s == "power") return BranchKind::Power;
  if (s == "quad_minus_one") return BranchKind::QuadMinusOne;
  if (s == "linear") return BranchKind::Linear;
  throw config_error("unknown branch kind: " + s);
}

/// One additive term of a piecewise function, live on [lo, hi). Terms with
/// the same interval sum, which is how zeta(r) = r^{p-1} + r^{2p-1} fits the
/// representation.
struct Piece {
  double lo = 0;
  double hi = std::numeric_limits<double>::infinity();
  BranchKind kind = BranchKind::Power;
  double c = 1;
  double a = 1;  // exponent; Power only

  bool contains(double r) const { return r >= lo && r < hi; }  // left-closed

  double value(double r) const {
    switch (kind) {
      case BranchKind::Power: return c * std::pow(r, a);
      case BranchKind::QuadMinusOne: return c * (r * r - 1.0);
      case BranchKind::Linear: return c * r;
    }
    return 0;
  }
  double deriv(double r) const {
    switch (kind) {
      case BranchKind::Power: return a == 0 ? 0.0 : c * a * std::pow(r, a - 1.0);
      case BranchKind::QuadMinusOne: return 2.0 * c * r;
      case BranchKind::Linear: return c;
    }
    return 0;
  }
  double deriv2(double r) const {
    switch (kind) {
      case BranchKind::Power:
        return (a == 0 || a == 1) ? 0.0 : c * a * (a - 1.0) * std::pow(r, a - 2.0);
      case BranchKind::QuadMinusOne: return 2.0 * c;
      case BranchKind::Linear: return 0;
    }
    return 0;
  }
};

namespace detail {

inline double piecewise_value(const std::vector<Piece>& pieces, double r) {
  double v = 0;
  for (const auto& p : pieces)
    if (p.contains(r)) v += p.value(r);
  return v;
}
inline double piecewise_deriv(const std::vector<Piece>& pieces, double r) {
  double v = 0;
  for (const auto& p : pieces)
    if (p.contains(r)) v += p.deriv(r);
  return v;
}
inline double piecewise_deriv2(const std::vector<Piece>& pieces, double r) {
  double v = 0;
  for (const auto& p : pieces)
    if (p.contains(r)) v += p.deriv2(r);
  return v;
}

inline std::vector<double> interior_breakpoints(const std::vector<Piece>& pieces) {
  std::vector<double> bp;
  for (const auto& p : pieces) {
    if (p.lo > 0) bp.push_back(p.lo);
    if (std::isfinite(p.hi)) bp.push_back(p.hi);
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  return bp;
}

}  // namespace detail

/// Piecewise (psi, zeta) pair: psi captures the population-likelihood
/// curvature, zeta the radius dependence of the sample-vs-population gradient
/// deviation. zeta_n, when set, adds the sample-size term 1/sqrt(n) to zeta.
struct RateProfile {
  std::vector<Piece> psi;
  std::vector<Piece> zeta;
  double c1 = 1;
  double c2 = 1;
  std::optional<double> zeta_n;
  std::string name = "custom";

  double psi_value(double r) const {
    if (r < 0) throw std::domain_error("psi: r must be >= 0");
    return detail::piecewise_value(psi, r);
  }
  double psi_deriv(double r) const { return detail::piecewise_deriv(psi, r); }
  double psi_deriv2(double r) const { return detail::piecewise_deriv2(psi, r); }

  double zeta_value(double r) const {
    if (r < 0) throw std::domain_error("zeta: r must be >= 0");
    return detail::piecewise_value(zeta, r) + (zeta_n ? 1.0 / std::sqrt(*zeta_n) : 0.0);
  }
  /// zeta evaluated as if the profile's sample size were n (used when fitting
  /// envelopes across an n-grid).
  double zeta_value_at_n(double r, double n) const {
    return detail::piecewise_value(zeta, r) + (zeta_n ? 1.0 / std::sqrt(n) : 0.0);
  }
  double zeta_deriv(double r) const { return detail::piecewise_deriv(zeta, r); }
  double zeta_deriv2(double r) const { return detail::piecewise_deriv2(zeta, r); }

  std::vector<double> psi_breakpoints() const { return detail::interior_breakpoints(psi); }
  std::vector<double> zeta_breakpoints() const { return detail::interior_breakpoints(zeta); }

  /// Numeric invariant check: psi(0)=0, psi continuous at breakpoints (1e-12
  /// relative), psi non-decreasing and branchwise convex on a log grid, zeta
  /// non-decreasing with zeta(0) >= 0. Convexity is checked within branches:
  /// the logistic preset has a genuine kink at its breakpoint, so a global
  /// convexity requirement would reject a profile the theory text uses.
  void validate() const {
    if (psi.empty() || zeta.empty()) throw config_error("RateProfile: empty branch list");
    if (std::abs(psi_value(0.0)) > 1e-12) throw config_error("RateProfile: psi(0) must be 0");
    if (zeta_value(0.0) < 0) throw config_error("RateProfile: zeta(0) must be >= 0");
    for (double bp : psi_breakpoints()) {
      const double left = detail::piecewise_value(psi, bp * (1.0 - 1e-13));
      const double right = psi_value(bp);
      if (std::abs(left - right) > 1e-12 * std::max(1.0, std::abs(right)) + 1e-300)
        throw config_error("RateProfile: psi discontinuous at breakpoint " + std::to_string(bp));
    }
    // monotonicity / branchwise convexity probes
    auto near_breakpoint = [](double r, const std::vector<double>& bps) {
      for (double b : bps)
        if (std::abs(r - b) <= 1e-6 * std::max(1.0, b)) return true;
      return false;
    };
    const auto psi_bp = psi_breakpoints();
    const auto zeta_bp = zeta_breakpoints();
    double prev_r = 0, prev_psi = 0, prev_zeta = zeta_value(0.0);
    std::vector<std::pair<double, double>> psi_pts;
    for (int i = 0; i <= 72; ++i) {
      const double r = std::pow(10.0, -6.0 + 12.0 * i / 72.0);
      const double pv = psi_value(r), zv = zeta_value(r);
      if (pv < prev_psi - 1e-9 * std::max(1.0, std::abs(prev_psi)))
        throw config_error("RateProfile: psi decreases near r=" + std::to_string(r));
      if (zv < prev_zeta - 1e-9 * std::max(1.0, std::abs(prev_zeta)))
        throw config_error("RateProfile: zeta decreases near r=" + std::to_string(r));
      prev_r = r;
      prev_psi = pv;
      prev_zeta = zv;
      if (!near_breakpoint(r, psi_bp) && !near_breakpoint(r, zeta_bp)) psi_pts.emplace_back(r, pv);
    }
    (void)prev_r;
    for (std::size_t i = 2; i < psi_pts.size(); ++i) {
      const auto [r0, f0] = psi_pts[i - 2];
      const auto [r1, f1] = psi_pts[i - 1];
      const auto [r2, f2] = psi_pts[i];
      bool straddles = false;
      for (double b : psi_bp)
        if (b > r0 && b < r2) straddles = true;
      if (straddles) continue;
      const double dd = ((f2 - f1) / (r2 - r1) - (f1 - f0) / (r1 - r0)) / (0.5 * (r2 - r0));
      if (dd < -1e-7 * std::max(1.0, std::abs(f1)) / (r1 * r1))
        throw config_error("RateProfile: psi not convex within branch near r=" +
                           std::to_string(r1));
    }
  }
};

/// Logistic preset: psi = c1 r^2 below 1 and c1 r above, zeta = c2.
inline RateProfile logistic_profile(double c1 = 1.0, double c2 = 1.0) {
  RateProfile p;
  p.name = "logistic";
  p.c1 = c1;
  p.c2 = c2;
  p.psi = {{0.0, 1.0, BranchKind::Power, c1, 2.0},
           {1.0, std::numeric_limits<double>::infinity(), BranchKind::Linear, c1, 1.0}};
  p.zeta = {{0.0, std::numeric_limits<double>::infinity(), BranchKind::Power, c2, 0.0}};
  p.validate();
  return p;
}

/// Single-index preset: psi = c1 r^{2p}, zeta = r^{p-1} + r^{2p-1}.
/// Default c1 = p (2p-1)!!, the exact weak-concavity constant at theta* = 0.
inline RateProfile single_index_profile(int p = 2, double c1 = 0.0) {
  if (p < 2) throw config_error("single_index_profile: p must be >= 2");
  RateProfile prof;
  prof.name = "single-index";
  double dfac = 1;
  for (int j = 2 * p - 1; j > 1; j -= 2) dfac *= j;
  prof.c1 = c1 > 0 ? c1 : p * dfac;
  prof.c2 = 1.0;
  const double inf = std::numeric_limits<double>::infinity();
  prof.psi = {{0.0, inf, BranchKind::Power, prof.c1, 2.0 * p}};
  prof.zeta = {{0.0, inf, BranchKind::Power, 1.0, p - 1.0},
               {0.0, inf, BranchKind::Power, 1.0, 2.0 * p - 1.0}};
  prof.validate();
  return prof;
}

/// Over-specified mixture preset: psi = c1 r^4 below sqrt(2) and
/// 4 c1 (r^2 - 1) above; zeta = r + 1/sqrt(n).
inline RateProfile gmm_profile(double n, double c1 = 0.210336) {
  if (!(n > 0)) throw config_error("gmm_profile: n must be positive");
  RateProfile p;
  p.name = "gmm";
  p.c1 = c1;
  p.c2 = 1.0;
  p.zeta_n = n;
  const double inf = std::numeric_limits<double>::infinity();
  const double root2 = std::sqrt(2.0);
  p.psi = {{0.0, root2, BranchKind::Power, c1, 4.0},
           {root2, inf, BranchKind::QuadMinusOne, 4.0 * c1}};
  p.zeta = {{0.0, inf, BranchKind::Linear, 1.0}};
  p.validate();
  return p;
}

/// (psi(r), zeta(r)) with the left-closed breakpoint convention.
inline std::pair<double, double> eval_profile(const RateProfile& profile, double r) {
  if (r < 0) throw std::domain_error("eval_profile: r must be >= 0");
  return {profile.psi_value(r), profile.zeta_value(r)};
}

// --- perturbation-level epsilon forms -------------------------------------

/// sqrt((d + log(1/delta))/n): the logistic / single-index form.
inline double epsilon_special(int d, double n, double delta) {
  if (!(delta > 0 && delta < 1)) throw std::domain_error("epsilon: delta must lie in (0,1)");
  return std::sqrt((d + std::log(1.0 / delta)) / n);
}

/// sqrt((d + log(log n / delta))/n): the mixture form.
inline double epsilon_gmm(int d, double n, double delta) {
  if (!(delta > 0 && delta < 1)) throw std::domain_error("epsilon: delta must lie in (0,1)");
  return std::sqrt((d + std::log(std::log(n) / delta)) / n);
}

/// (B + d log(1/delta))/n: additive constant of the rate equation.
inline double rate_const_term(double B, int d, double n, double delta) {
  if (!(delta > 0 && delta < 1)) throw std::domain_error("const term: delta must lie in (0,1)");
  return (B + d * std::log(1.0 / delta)) / n;
}

/// (B + p d)/n: the moment-level constant.
inline double moment_const_term(double B, double p, int d, double n) {
  return (B + p * d) / n;
}

// --- W.4 -------------------------------------------------------------------

struct W4Result {
  bool ok = false;
  bool monotone = false;
  double liminf_estimate = 0;
  std::array<double, 4> probes{1e3, 1e4, 1e5, 1e6};
  std::array<double, 4> ratios{};
};

/// Probes psi(z)/(z zeta(z)) at four decades; the sequence must be
/// non-decreasing (within 1e-9), and the last value estimates the liminf.
inline W4Result check_w4(const RateProfile& profile, double epsilon) {
  W4Result res;
  res.monotone = true;
  for (std::size_t i = 0; i < res.probes.size(); ++i) {
    const double z = res.probes[i];
    res.ratios[i] = profile.psi_value(z) / (z * profile.zeta_value(z));
    if (i > 0 && res.ratios[i] < res.ratios[i - 1] - 1e-9 * std::max(1.0, res.ratios[i - 1]))
      res.monotone = false;
  }
  res.liminf_estimate = res.ratios.back();
  res.ok = res.monotone && epsilon < res.liminf_estimate;
  return res;
}

// --- rate equation ----------------------------------------------------------

/// Unique positive root of psi(z) = eps*zeta(z)*z + const_term with
/// diagnostics.
struct RateSolution {
  double z_star = 0;
  double residual = 0;
  std::pair<double, double> bracket{0, 0};
  int iterations = 0;
  double epsilon = 0;
  double const_term = 0;
};

inline RateSolution solve_rate_equation(const RateProfile& profile, double epsilon,
                                        double const_term) {
  if (!(const_term > 0)) throw std::domain_error("solve_rate_equation: const_term must be > 0");
  if (epsilon < 0) throw std::domain_error("solve_rate_equation: epsilon must be >= 0");
  const W4Result w4 = check_w4(profile, epsilon);
  if (!w4.ok)
    throw config_error("solve_rate_equation: W.4 violated or constants inconsistent "
                       "(epsilon >= liminf psi/(z zeta), or ratio not monotone)");

  auto theta = [&](double z) {
    return profile.psi_value(z) - epsilon * profile.zeta_value(z) * z - const_term;
  };
  double lo = 1e-12, hi = 1.0;
  if (theta(lo) >= 0)
    throw config_error("solve_rate_equation: root lies below the bracket floor 1e-12");
  int doublings = 0;
  while (theta(hi) <= 0) {
    hi *= 2;
    if (++doublings > 60)
      throw config_error("solve_rate_equation: W.4 violated or constants inconsistent "
                         "(no sign change up to 2^60)");
  }
  lo = doublings > 0 ? hi / 2 : lo;

  RateSolution sol;
  sol.epsilon = epsilon;
  sol.const_term = const_term;
  int it = 0;
  while ((hi - lo) > 1e-13 * hi && it < 300) {
    const double mid = 0.5 * (lo + hi);
    (theta(mid) > 0 ? hi : lo) = mid;
    ++it;
  }
  sol.z_star = 0.5 * (lo + hi);
  sol.residual = theta(sol.z_star);
  sol.bracket = {lo, hi};
  sol.iterations = it;
  if (std::abs(sol.residual) > 1e-12 * std::max(1.0, profile.psi_value(sol.z_star)))
    throw numeric_error("solve_rate_equation: residual above tolerance");
  return sol;
}

// --- Corollary bound --------------------------------------------------------

/// Closed-form bound for local power profiles psi = r^alpha, zeta = r^beta
/// with eps = sqrt((d + log(1/delta))/n): the max of the base raised to
/// 1/(2(alpha-beta-1)) and to 1/alpha, universal constant set to 1.
struct CorollaryBound {
  double exp_slow = 0;  // 1/(2(alpha - beta - 1))
  double exp_fast = 0;  // 1/alpha
  double base = 0;
  double value = 0;
  double selected_exponent = 0;  // exponent attaining the max
};

inline CorollaryBound corollary_bound(double alpha, double beta, int d, double n, double delta,
                                      double B) {
  if (!(alpha > beta + 1))
    throw std::domain_error("corollary_bound: requires alpha > beta + 1");
  if (!(delta > 0 && delta < 1))
    throw std::domain_error("corollary_bound: delta must lie in (0,1)");
  CorollaryBound cb;
  cb.exp_slow = 1.0 / (2.0 * (alpha - beta - 1.0));
  cb.exp_fast = 1.0 / alpha;
  cb.base = (d + std::log(1.0 / delta) + B) / n;
  const double v1 = std::pow(cb.base, cb.exp_slow);
  const double v2 = std::pow(cb.base, cb.exp_fast);
  cb.value = std::max(v1, v2);
  cb.selected_exponent = v1 >= v2 ? cb.exp_slow : cb.exp_fast;
  return cb;
}

// --- JSON serialization -----------------------------------------------------

inline nlohmann::json profile_to_json(const RateProfile& p) {
  auto pieces = [](const std::vector<Piece>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : v) {
      nlohmann::json j{{"lo", t.lo}, {"kind", to_string(t.kind)}, {"constants", {{"c", t.c}}}};
      if (std::isfinite(t.hi)) j["hi"] = t.hi;
      if (t.kind == BranchKind::Power) j["constants"]["a"] = t.a;
      arr.push_back(j);
    }
    return arr;
  };
  nlohmann::json j{{"name", p.name}, {"c1", p.c1},   {"c2", p.c2},
                   {"branches", pieces(p.psi)},      {"zeta", pieces(p.zeta)}};
  if (p.zeta_n) j["n_for_zeta"] = *p.zeta_n;
  return j;
}

inline RateProfile profile_from_json(const nlohmann::json& j) {
  auto pieces = [](const nlohmann::json& arr) {
    std::vector<Piece> v;
    for (const auto& e : arr) {
      Piece t;
      t.lo = e.at("lo").get<double>();
      t.hi = e.contains("hi") ? e.at("hi").get<double>()
                              : std::numeric_limits<double>::infinity();
      t.kind = branch_kind_from_string(e.at("kind").get<std::string>());
      t.c = e.at("constants").at("c").get<double>();
      if (t.kind == BranchKind::Power) t.a = e.at("constants").at("a").get<double>();
      v.push_back(t);
    }
    return v;
  };
  RateProfile p;
  p.name = j.value("name", std::string("custom"));
  p.c1 = j.value("c1", 1.0);
  p.c2 = j.value("c2", 1.0);
  p.psi = pieces(j.at("branches"));
  p.zeta = pieces(j.at("zeta"));
  if (j.contains("n_for_zeta")) p.zeta_n = j.at("n_for_zeta").get<double>();
  p.validate();
  return p;
}

}  // namespace contraction
