#include <catch2/catch_amalgamated.hpp>

#include "contraction/assumptions.hpp"
#include "contraction/rate.hpp"
#include "contraction/rng.hpp"

#include <cmath>

using namespace contraction;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent fixed-point oracle for pure power profiles
//   c_psi z^alpha = eps c_zeta z^{beta+1} + K.
// The map z -> ((eps c_zeta z^{beta+1} + K)/c_psi)^{1/alpha} is a monotone
// contraction near the root whenever alpha > beta + 1.
double fixed_point_root(double c_psi, double alpha, double c_zeta, double beta, double eps,
                        double K) {
  double z = std::pow(K / c_psi, 1.0 / alpha);
  for (int it = 0; it < 10000; ++it) {
    const double next = std::pow((eps * c_zeta * std::pow(z, beta + 1.0) + K) / c_psi,
                                 1.0 / alpha);
    if (std::abs(next - z) <= 1e-15 * std::max(1.0, std::abs(next))) return next;
    z = next;
  }
  return z;
}

RateProfile power_profile(double c_psi, double alpha, double c_zeta, double beta) {
  RateProfile p;
  const double inf = std::numeric_limits<double>::infinity();
  p.psi = {{0.0, inf, BranchKind::Power, c_psi, alpha}};
  p.zeta = {{0.0, inf, BranchKind::Power, c_zeta, beta}};
  p.c1 = c_psi;
  p.c2 = c_zeta;
  p.validate();
  return p;
}

}  // namespace

TEST_CASE("profile presets evaluate the pinned closed forms") {
  SECTION("gmm: psi branches and zeta = r + 1/sqrt(n)") {
    const auto p = gmm_profile(1e4);
    const auto [psi1, zeta1] = eval_profile(p, 1.0);
    CHECK_THAT(psi1, WithinRel(0.210336, 1e-12));
    CHECK_THAT(zeta1, WithinAbs(1.01, 1e-15));
    // continuity at sqrt(2): quartic c1 r^4 meets 4 c1 (r^2 - 1)
    const double r2 = std::sqrt(2.0);
    CHECK_THAT(p.psi_value(r2), WithinRel(4.0 * 0.210336, 1e-12));
    CHECK_THAT(p.psi_value(r2 * (1 - 1e-12)), WithinRel(4.0 * 0.210336, 1e-9));
  }
  SECTION("logistic: linear branch above 1") {
    const auto p = logistic_profile();
    CHECK_THAT(p.psi_value(2.0), WithinRel(2.0, 1e-15));
    CHECK_THAT(p.psi_value(0.5), WithinRel(0.25, 1e-15));
    CHECK(p.zeta_value(0.0) == p.zeta_value(100.0));
  }
  SECTION("single-index p=2: c1 = 6") {
    const auto p = single_index_profile(2);
    CHECK_THAT(p.c1, WithinRel(6.0, 1e-15));
    CHECK_THAT(p.psi_value(1.5), WithinRel(6.0 * std::pow(1.5, 4.0), 1e-14));
    CHECK_THAT(p.zeta_value(2.0), WithinRel(2.0 + 8.0, 1e-14));
  }
  SECTION("negative radius is a domain error") {
    CHECK_THROWS_AS(eval_profile(logistic_profile(), -0.1), std::domain_error);
  }
}

TEST_CASE("rate equation: closed-form quadratic case") {
  // psi = z^2, zeta = 1, eps = 0.1, K = 0.01 -> z* = (0.1 + sqrt(0.05))/2
  const auto prof = power_profile(1.0, 2.0, 1.0, 0.0);
  const auto sol = solve_rate_equation(prof, 0.1, 0.01);
  CHECK_THAT(sol.z_star, WithinRel(0.16180339887498948, 1e-10));
  CHECK(std::abs(sol.residual) <= 1e-12 * std::max(1.0, prof.psi_value(sol.z_star)));

  // the residual function changes sign across the reported bracket
  auto vartheta = [&](double z) {
    return prof.psi_value(z) - sol.epsilon * prof.zeta_value(z) * z - sol.const_term;
  };
  CHECK(vartheta(sol.bracket.first) <= 0);
  CHECK(vartheta(sol.bracket.second) > 0);
  CHECK(sol.bracket.first <= sol.z_star);
  CHECK(sol.z_star <= sol.bracket.second);
}

TEST_CASE("one solver serves both the tail and moment constants") {
  // The tail constant (B + d log(1/delta))/n and the moment-level
  // (B + p d)/n route through the same operation.
  const auto gmm = gmm_profile(1e4);
  const double eps = epsilon_special(4, 1e4, 0.1);
  const double tail = solve_rate_equation(gmm, eps, rate_const_term(0.0, 4, 1e4, 0.1)).z_star;
  const double moment =
      solve_rate_equation(gmm, eps, moment_const_term(0.0, 2.0, 4, 1e4)).z_star;
  CHECK(tail > 0);
  CHECK(moment > 0);
  // p d = 8 exceeds d log(1/delta) = 9.2 slightly less, so the roots are close
  CHECK_THAT(moment_const_term(0.0, 2.0, 4, 1e4), WithinRel(8.0 / 1e4, 1e-12));
  CHECK(moment < 2.0 * tail);
}

TEST_CASE("rate equation: eps = 0 inverts psi") {
  const auto gmm = gmm_profile(1e4);
  for (double z0 : {0.05, 0.3, 1.0, 2.5}) {
    const auto sol = solve_rate_equation(gmm, 0.0, gmm.psi_value(z0));
    CHECK_THAT(sol.z_star, WithinRel(z0, 1e-12));
  }
}

TEST_CASE("rate equation: gmm example at n=1e4, d=4, delta=0.1, B=0") {
  const auto gmm = gmm_profile(1e4);
  const double eps = epsilon_special(4, 1e4, 0.1);
  const double k = rate_const_term(0.0, 4, 1e4, 0.1);
  CHECK_THAT(eps, WithinRel(0.025104949896373116, 1e-12));
  CHECK_THAT(k, WithinRel(0.0009210340371976184, 1e-12));
  const auto sol = solve_rate_equation(gmm, eps, k);
  // independent high-precision bisection oracle gives 0.3890442097655291
  CHECK_THAT(sol.z_star, WithinRel(0.3890442097655291, 1e-9));
}

TEST_CASE("rate equation agrees with the fixed-point oracle on random power laws") {
  PhiloxRng rng(31337, 0);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double beta = 3.0 * rng.uniform_co();
    const double alpha = beta + 1.0 + 0.25 + 5.0 * rng.uniform_co();
    const double c_psi = 0.1 + 5.0 * rng.uniform_co();
    const double c_zeta = 0.1 + 5.0 * rng.uniform_co();
    const double eps = rng.uniform_co();
    const double K = std::pow(10.0, -8.0 + 7.0 * rng.uniform_co());
    const auto prof = power_profile(c_psi, alpha, c_zeta, beta);
    const auto sol = solve_rate_equation(prof, eps, K);
    const double oracle = fixed_point_root(c_psi, alpha, c_zeta, beta, eps, K);
    REQUIRE_THAT(sol.z_star, WithinRel(oracle, 1e-9));
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("z* is monotone in epsilon and const_term") {
  PhiloxRng rng(99, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const double beta = 2.0 * rng.uniform_co();
    const double alpha = beta + 1.5 + 3.0 * rng.uniform_co();
    const auto prof = power_profile(0.5 + rng.uniform_co(), alpha, 0.5 + rng.uniform_co(), beta);
    const double eps = 0.5 * rng.uniform_co();
    const double K = std::pow(10.0, -6.0 + 4.0 * rng.uniform_co());
    const double base = solve_rate_equation(prof, eps, K).z_star;
    CHECK(solve_rate_equation(prof, eps * 1.3 + 1e-4, K).z_star >= base - 1e-12);
    CHECK(solve_rate_equation(prof, eps, K * 1.7).z_star >= base - 1e-12);
  }
}

TEST_CASE("solver rejects bad inputs") {
  const auto prof = power_profile(1.0, 3.0, 1.0, 1.0);
  CHECK_THROWS_AS(solve_rate_equation(prof, 0.1, 0.0), std::domain_error);
  CHECK_THROWS_AS(solve_rate_equation(prof, 0.1, -1.0), std::domain_error);
  // alpha = beta + 1: ratio is constant c_psi, so any eps >= c_psi violates W.4
  const auto flat = power_profile(1.0, 2.0, 1.0, 1.0);
  CHECK_THROWS_AS(solve_rate_equation(flat, 1.5, 0.01), config_error);
}

TEST_CASE("corollary bound") {
  SECTION("single index p=2: both exponents 1/4") {
    const auto cb = corollary_bound(4.0, 1.0, 10, 1e6, 0.1, 0.0);
    CHECK_THAT(cb.exp_slow, WithinAbs(0.25, 1e-15));
    CHECK_THAT(cb.exp_fast, WithinAbs(0.25, 1e-15));
    CHECK_THAT(cb.value, WithinRel(0.059224185191648716, 1e-12));
  }
  SECTION("alpha=2, beta=0 reproduces the strongly concave 1/2 shape") {
    const auto cb = corollary_bound(2.0, 0.0, 5, 1e4, 0.1, 0.0);
    CHECK_THAT(cb.exp_slow, WithinAbs(0.5, 1e-15));
    CHECK_THAT(cb.exp_fast, WithinAbs(0.5, 1e-15));
  }
  SECTION("alpha=6, beta=1: rate exponent 1/8 selected since alpha >= 2(beta+1)") {
    const auto cb = corollary_bound(6.0, 1.0, 5, 1e4, 0.1, 0.0);
    CHECK_THAT(cb.exp_slow, WithinAbs(1.0 / 8.0, 1e-15));
    CHECK_THAT(cb.exp_fast, WithinAbs(1.0 / 6.0, 1e-15));
    CHECK(cb.selected_exponent == cb.exp_slow);
  }
  SECTION("domain errors") {
    CHECK_THROWS_AS(corollary_bound(2.0, 1.0, 5, 1e4, 0.1, 0.0), std::domain_error);
    CHECK_THROWS_AS(corollary_bound(4.0, 1.0, 5, 1e4, 1.5, 0.0), std::domain_error);
  }
}

TEST_CASE("corollary bound dominates the solver on pure power profiles") {
  // Self-consistency up to the suppressed universal constant: record the
  // worst ratio z*/bound over a (d, n, delta) grid; it must stay below 2.
  double worst = 0;
  for (double alpha : {3.0, 4.0, 6.0}) {
    for (double beta : {0.0, 1.0}) {
      if (!(alpha - (beta + 1.0) >= 1.0)) continue;
      const auto prof = power_profile(1.0, alpha, 1.0, beta);
      for (int d : {2, 8, 32}) {
        for (double n : {1e3, 1e4, 1e6}) {
          for (double delta : {0.01, 0.1, 0.4}) {
            const double eps = epsilon_special(d, n, delta);
            const auto w4 = check_w4(prof, eps);
            if (!w4.ok) continue;
            const double K = rate_const_term(0.0, d, n, delta);
            const double z = solve_rate_equation(prof, eps, K).z_star;
            const auto cb = corollary_bound(alpha, beta, d, n, delta, 0.0);
            worst = std::max(worst, z / cb.value);
          }
        }
      }
    }
  }
  INFO("worst z*/bound ratio K = " << worst);
  CHECK(worst <= 2.0);
  CHECK(worst > 0.0);
}

TEST_CASE("W.3 checker") {
  std::vector<double> grid;
  for (int i = 0; i <= 120; ++i) grid.push_back(std::pow(10.0, -3.0 + 6.0 * i / 120.0));

  SECTION("single-index preset passes both inequalities") {
    const auto rep = check_w3(single_index_profile(2), grid);
    CHECK(rep.all_passed());
    CHECK(rep.records.size() > 200);
  }
  SECTION("gmm preset passes both inequalities") {
    const auto rep = check_w3(gmm_profile(1e4), grid);
    CHECK(rep.all_passed());
  }
  SECTION("logistic linear branch fails the second inequality, first passes") {
    const auto rep = check_w3(logistic_profile(), grid);
    CHECK_FALSE(rep.all_passed());
    bool first_ok = true;
    bool second_fails_above_one = false, second_ok_below_one = true;
    for (const auto& rec : rep.records) {
      if (rec.inequality.rfind("w3.1", 0) == 0 && !rec.pass) first_ok = false;
      if (rec.inequality.rfind("w3.2", 0) == 0) {
        if (rec.r > 1.0 && !rec.pass) {
          second_fails_above_one = true;
          // r c1 c2 on the left, 3 r c1 c2 on the right
          CHECK_THAT(rec.rhs, WithinRel(3.0 * rec.lhs, 1e-12));
        }
        if (rec.r < 1.0 && !rec.pass) second_ok_below_one = false;
      }
    }
    CHECK(first_ok);
    CHECK(second_fails_above_one);
    CHECK(second_ok_below_one);
  }
  SECTION("breakpoint-adjacent cells are skipped and noted") {
    std::vector<double> bp_grid = {1.0 - 1e-9, 1.0, 1.0 + 1e-9, 2.0};
    const auto rep = check_w3(logistic_profile(), bp_grid);
    REQUIRE_FALSE(rep.notes.empty());
    CHECK(rep.notes.front().find("skipped 3") != std::string::npos);
  }
}

TEST_CASE("W.4 checker matches derived limits") {
  SECTION("logistic ratio is constant c1/c2") {
    const auto res = check_w4(logistic_profile(2.0, 4.0), 0.1);
    for (double r : res.ratios) CHECK_THAT(r, WithinRel(0.5, 1e-12));
    CHECK(res.monotone);
    CHECK(res.ok);
  }
  SECTION("gmm ratio approaches 4 c1") {
    const auto res = check_w4(gmm_profile(1e4), 0.01);
    CHECK(res.monotone);
    CHECK_THAT(res.liminf_estimate, WithinRel(4.0 * 0.210336, 0.01));
    CHECK(res.ratios[0] < res.ratios[3]);
  }
  SECTION("eps = 0 passes for every preset") {
    CHECK(check_w4(logistic_profile(), 0.0).ok);
    CHECK(check_w4(gmm_profile(100), 0.0).ok);
    CHECK(check_w4(single_index_profile(3), 0.0).ok);
  }
}

TEST_CASE("weak concavity checker") {
  SECTION("gaussian location: S.1 holds with mu = 1 exactly") {
    RateProfile quad;
    const double inf = std::numeric_limits<double>::infinity();
    quad.name = "gaussian-s1";
    quad.psi = {{0.0, inf, BranchKind::Power, 1.0, 2.0}};
    quad.zeta = {{0.0, inf, BranchKind::Power, 1.0, 0.0}};
    quad.validate();
    const auto spec = ModelSpec::paper_regime(ModelKind::GaussianLocation, 3);
    const auto rep = check_weak_concavity(spec, quad);
    CHECK(rep.all_passed());
    CHECK_THAT(rep.constants.at("mu_hat"), WithinRel(1.0, 1e-9));
    CHECK_THAT(rep.constants.at("L1_hat"), WithinRel(1.0, 1e-6));
  }
  SECTION("single-index p=2: equality with c1 = 6") {
    const auto spec = ModelSpec::paper_regime(ModelKind::SingleIndex, 4, 2);
    ConcavityCheckConfig ccfg;
    ccfg.max_radius = 3.0;
    const auto rep = check_weak_concavity(spec, single_index_profile(2), ccfg);
    CHECK(rep.all_passed());
    CHECK_THAT(rep.constants.at("c1_hat"), WithinRel(6.0, 1e-9));
  }
  SECTION("gmm: margins nonnegative on (0, sqrt(2)] with c1 = 0.210336") {
    const auto spec = ModelSpec::paper_regime(ModelKind::OverspecGmm, 4);
    const auto rep = check_weak_concavity(spec, gmm_profile(1e4));
    CHECK(rep.all_passed());
    CHECK(rep.constants.at("c1_hat") >= 0.210336);
  }
  SECTION("logistic: reported constant is positive (Monte Carlo)") {
    const auto spec = ModelSpec::paper_regime(ModelKind::Logistic, 3);
    ConcavityCheckConfig ccfg;
    ccfg.max_radius = 2.0;
    ccfg.directions = 2;
    ccfg.population.mc_samples = 50000;
    const auto rep = check_weak_concavity(spec, logistic_profile(), ccfg);
    CHECK(rep.constants.at("c1_hat") > 0.0);
    CHECK_FALSE(rep.notes.empty());
  }
}

TEST_CASE("assumption reports serialize and round-trip losslessly") {
  const auto spec = ModelSpec::paper_regime(ModelKind::SingleIndex, 2, 2);
  auto rep = check_weak_concavity(spec, single_index_profile(2));
  rep.w4_liminf = 6.0;
  const auto j = report_to_json(rep);
  const auto back = report_from_json(j);
  REQUIRE(back.records.size() == rep.records.size());
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    CHECK(back.records[i].r == rep.records[i].r);
    CHECK(back.records[i].lhs == rep.records[i].lhs);
    CHECK(back.records[i].rhs == rep.records[i].rhs);
    CHECK(back.records[i].pass == rep.records[i].pass);
  }
  CHECK(back.constants == rep.constants);
  CHECK(back.w4_liminf == rep.w4_liminf);
}

TEST_CASE("profile json round-trip") {
  const auto orig = gmm_profile(5000);
  const auto j = profile_to_json(orig);
  const auto back = profile_from_json(j);
  CHECK(back.name == orig.name);
  CHECK(back.zeta_n == orig.zeta_n);
  for (double r : {0.0, 0.5, 1.0, std::sqrt(2.0), 7.5}) {
    CHECK(back.psi_value(r) == orig.psi_value(r));
    CHECK(back.zeta_value(r) == orig.zeta_value(r));
  }
}

TEST_CASE("profile validation catches broken invariants") {
  RateProfile bad;
  const double inf = std::numeric_limits<double>::infinity();
  // psi(0) != 0
  bad.psi = {{0.0, inf, BranchKind::Power, 1.0, 0.0}};
  bad.zeta = {{0.0, inf, BranchKind::Linear, 1.0}};
  CHECK_THROWS_AS(bad.validate(), config_error);
  // discontinuous psi
  bad.psi = {{0.0, 1.0, BranchKind::Power, 1.0, 2.0}, {1.0, inf, BranchKind::Linear, 5.0}};
  CHECK_THROWS_AS(bad.validate(), config_error);
  // decreasing psi
  bad.psi = {{0.0, inf, BranchKind::Power, 1.0, -1.0}};
  CHECK_THROWS_AS(bad.validate(), config_error);
}
