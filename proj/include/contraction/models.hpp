#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>

#include "contraction/errors.hpp"
#include "contraction/quadrature.hpp"
#include "contraction/rng.hpp"

namespace contraction {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class ModelKind { Logistic, SingleIndex, OverspecGmm, GaussianLocation };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Logistic: return "logistic";
    case ModelKind::SingleIndex: return "single-index";
    case ModelKind::OverspecGmm: return "gmm";
    case ModelKind::GaussianLocation: return "gaussian";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "logistic") return ModelKind::Logistic;
  if (s == "single-index" || s == "single_index") return ModelKind::SingleIndex;
  if (s == "gmm") return ModelKind::OverspecGmm;
  if (s == "gaussian") return ModelKind::GaussianLocation;
  throw config_error("unknown model kind: " + s);
}

/// (2k-1)!! for the single-index population gradient.
inline double odd_double_factorial(int k) {
  double r = 1;
  for (int j = 2 * k - 1; j > 1; j -= 2) r *= j;
  return r;
}

/// Which Bayesian model, its dimension, degree, and true parameter.
struct ModelSpec {
  ModelKind kind = ModelKind::GaussianLocation;
  int p = 2;  // single-index degree; ignored elsewhere
  int d = 1;
  VectorXd theta_star;

  ModelSpec() { theta_star = VectorXd::Zero(1); }
  ModelSpec(ModelKind k, int dim, VectorXd star, int degree = 2)
      : kind(k), p(degree), d(dim), theta_star(std::move(star)) {
    if (d < 1) throw config_error("ModelSpec: d must be >= 1");
    if (kind == ModelKind::SingleIndex && p < 2)
      throw config_error("ModelSpec: single-index degree p must be >= 2");
    if (theta_star.size() != d)
      throw config_error("ModelSpec: theta_star length must equal d");
  }

  /// Singular regime theta_star = 0, where the closed-form population
  /// gradients of the single-index and mixture models apply.
  static ModelSpec paper_regime(ModelKind k, int dim, int degree = 2) {
    return ModelSpec(k, dim, VectorXd::Zero(dim), degree);
  }

  bool responses_present() const {
    return kind == ModelKind::Logistic || kind == ModelKind::SingleIndex;
  }

  std::uint64_t fingerprint() const {
    std::uint64_t h = fnv1a(&kind, sizeof(kind));
    h = fnv1a(&p, sizeof(p), h);
    h = fnv1a(&d, sizeof(d), h);
    h = fnv1a(theta_star.data(), sizeof(double) * theta_star.size(), h);
    return h;
  }
};

/// Isotropic Gaussian prior N(mean, sigma^2 I). The log-density gradient
/// (mean - theta)/sigma^2 is 1/sigma^2-Lipschitz by construction.
struct PriorSpec {
  VectorXd mean;
  double sigma = 1.0;

  PriorSpec() = default;
  PriorSpec(VectorXd mu, double s) : mean(std::move(mu)), sigma(s) {
    if (!(sigma > 0)) throw config_error("PriorSpec: sigma must be positive");
  }

  VectorXd grad_log(const VectorXd& theta) const {
    if (theta.size() != mean.size()) throw config_error("PriorSpec: dimension mismatch");
    return (mean - theta) / (sigma * sigma);
  }

  double log_density(const VectorXd& theta) const {
    if (theta.size() != mean.size()) throw config_error("PriorSpec: dimension mismatch");
    constexpr double kLog2Pi = 1.8378770664093454836;
    const double q = (theta - mean).squaredNorm() / (sigma * sigma);
    return -0.5 * q - 0.5 * static_cast<double>(mean.size()) * (kLog2Pi + 2 * std::log(sigma));
  }

  /// sup_theta <grad log pi(theta), theta - theta_star>; the supremum is
  /// attained at the midpoint of mean and theta_star and equals
  /// ||mean - theta_star||^2 / (4 sigma^2).
  double concentration_bound(const VectorXd& theta_star) const {
    if (theta_star.size() != mean.size()) throw config_error("PriorSpec: dimension mismatch");
    return (mean - theta_star).squaredNorm() / (4.0 * sigma * sigma);
  }
};

/// Immutable sample: covariate rows (or raw observations) plus responses
/// where the model has them.
struct Dataset {
  MatrixXd covariates;   // n x d
  VectorXd responses;    // length n, or empty
  long n = 0;
  std::uint64_t seed = 0;
  std::uint64_t model_fingerprint = 0;

  // Cached per-row quantities used by the likelihood paths.
  VectorXd row_sqnorm;   // ||x_i||^2
  VectorXd column_mean;  // xbar (gaussian location sufficient statistic)
  double mean_sqnorm = 0;

  void finalize_caches() {
    row_sqnorm = covariates.rowwise().squaredNorm();
    column_mean = covariates.colwise().mean();
    mean_sqnorm = row_sqnorm.mean();
  }
};

/// Draws a dataset from the model's generative law. Reproducible: one Philox
/// stream keyed by (seed, model fingerprint), row-major draw order.
inline Dataset generate_dataset(const ModelSpec& spec, long n, std::uint64_t seed) {
  if (n < 1) throw config_error("generate_dataset: n must be >= 1");
  Dataset data;
  data.n = n;
  data.seed = seed;
  data.model_fingerprint = spec.fingerprint();
  data.covariates.resize(n, spec.d);
  if (spec.responses_present()) data.responses.resize(n);

  PhiloxRng rng(seed, derive_stream(data.model_fingerprint, 0xDA7AULL));
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < spec.d; ++j) data.covariates(i, j) = rng.normal();
    switch (spec.kind) {
      case ModelKind::Logistic: {
        const double t = data.covariates.row(i).dot(spec.theta_star);
        const double p1 = 1.0 / (1.0 + std::exp(-t));
        data.responses(i) = rng.uniform_co() < p1 ? 1.0 : -1.0;
        break;
      }
      case ModelKind::SingleIndex: {
        const double t = data.covariates.row(i).dot(spec.theta_star);
        data.responses(i) = std::pow(t, spec.p) + rng.normal();
        break;
      }
      case ModelKind::OverspecGmm: {
        const double c = rng.uniform_co() < 0.5 ? -1.0 : 1.0;
        data.covariates.row(i) += (c * spec.theta_star).transpose();
        break;
      }
      case ModelKind::GaussianLocation:
        data.covariates.row(i) += spec.theta_star.transpose();
        break;
    }
  }
  data.finalize_caches();
  return data;
}

namespace detail {

inline void check_eval_inputs(const ModelSpec& spec, const Dataset& data, const VectorXd& theta) {
  if (theta.size() != spec.d) throw config_error("theta length must equal model dimension");
  if (data.covariates.cols() != spec.d || data.covariates.rows() != data.n)
    throw config_error("dataset does not match model dimension");
  if (spec.responses_present() && data.responses.size() != data.n)
    throw config_error("dataset is missing responses");
}

inline double int_pow(double x, int k) {
  double r = 1;
  while (k-- > 0) r *= x;
  return r;
}

[[noreturn]] inline void report_bad_sample(const ModelSpec& spec, const Dataset& data,
                                           const VectorXd& theta) {
  // Rescan to name the first offending sample.
  for (long i = 0; i < data.n; ++i) {
    const double t = data.covariates.row(i) * theta;
    if (!std::isfinite(t))
      throw numeric_error("non-finite likelihood term at sample " + std::to_string(i), i);
  }
  (void)spec;
  throw numeric_error("non-finite likelihood accumulation");
}

}  // namespace detail

struct LoglikValueGrad {
  double value = 0;
  VectorXd grad;
};

/// Sample log-likelihood F_n and its gradient in one pass over the data.
inline LoglikValueGrad sample_loglik_and_grad(const ModelSpec& spec, const Dataset& data,
                                              const VectorXd& theta) {
  detail::check_eval_inputs(spec, data, theta);
  constexpr double kLog2Pi = 1.8378770664093454836;
  constexpr double kLn2 = 0.6931471805599453094;
  const double inv_n = 1.0 / static_cast<double>(data.n);
  LoglikValueGrad out;

  switch (spec.kind) {
    case ModelKind::GaussianLocation: {
      // F_n(theta) = -mean ||x_i - theta||^2 / 2 - d/2 log 2pi; grad = xbar - theta
      const double cross = data.column_mean.dot(theta);
      out.value = -0.5 * (data.mean_sqnorm - 2.0 * cross + theta.squaredNorm()) -
                  0.5 * spec.d * kLog2Pi;
      out.grad = data.column_mean - theta;
      break;
    }
    case ModelKind::Logistic: {
      const VectorXd t = data.covariates * theta;
      VectorXd w(data.n);
      double ll = 0;
      for (long i = 0; i < data.n; ++i) {
        const double yt = data.responses(i) * t(i);
        const double e = std::exp(-std::abs(yt));
        // log sigma(yt) = -log(1 + e^{-yt}), stable in both tails
        ll -= (yt >= 0 ? std::log1p(e) : -yt + std::log1p(e));
        const double s = yt >= 0 ? e / (1.0 + e) : 1.0 / (1.0 + e);  // sigma(-yt)
        w(i) = data.responses(i) * s;
      }
      out.value = ll * inv_n;
      out.grad = (data.covariates.transpose() * w) * inv_n;
      break;
    }
    case ModelKind::SingleIndex: {
      const VectorXd t = data.covariates * theta;
      VectorXd w(data.n);
      double ll = 0;
      for (long i = 0; i < data.n; ++i) {
        const double tp1 = detail::int_pow(t(i), spec.p - 1);
        const double resid = data.responses(i) - tp1 * t(i);
        ll -= 0.5 * resid * resid;
        w(i) = spec.p * resid * tp1;
      }
      out.value = ll * inv_n;
      out.grad = (data.covariates.transpose() * w) * inv_n;
      break;
    }
    case ModelKind::OverspecGmm: {
      // log(mix) = -(||x||^2 + ||theta||^2)/2 + log cosh(x.theta) - d/2 log 2pi
      const VectorXd t = data.covariates * theta;
      VectorXd w(data.n);
      double acc = 0;
      for (long i = 0; i < data.n; ++i) {
        const double a = std::abs(t(i));
        const double e = std::exp(-2.0 * a);
        acc += -0.5 * data.row_sqnorm(i) + a + std::log1p(e) - kLn2;
        const double th = (1.0 - e) / (1.0 + e);
        w(i) = t(i) >= 0 ? th : -th;
      }
      out.value = acc * inv_n - 0.5 * theta.squaredNorm() - 0.5 * spec.d * kLog2Pi;
      out.grad = (data.covariates.transpose() * w) * inv_n - theta;
      break;
    }
  }
  if (!std::isfinite(out.value) || !out.grad.allFinite())
    detail::report_bad_sample(spec, data, theta);
  return out;
}

inline double sample_loglik(const ModelSpec& spec, const Dataset& data, const VectorXd& theta) {
  return sample_loglik_and_grad(spec, data, theta).value;
}

/// grad F_n(theta).
inline VectorXd sample_loglik_grad(const ModelSpec& spec, const Dataset& data,
                                   const VectorXd& theta) {
  return sample_loglik_and_grad(spec, data, theta).grad;
}

/// Quadrature / Monte Carlo budget for population-level quantities.
struct PopulationConfig {
  std::size_t quad_nodes = 200;   // 1-d quadrature (gmm); auto-refined with scale
  std::size_t mc_samples = 200000;  // Monte Carlo (logistic)
  std::uint64_t seed = 0;
};

struct PopulationGrad {
  VectorXd grad;
  double mc_stderr = 0;  // 0 for closed-form / quadrature paths
};

/// grad F(theta), the population log-likelihood gradient.
///
/// gmm and single-index require theta_star = 0 (the regime with closed or
/// 1-d-reducible forms); logistic is estimated by seeded Monte Carlo.
inline PopulationGrad population_grad_detail(const ModelSpec& spec, const VectorXd& theta,
                                             const PopulationConfig& cfg = {}) {
  if (theta.size() != spec.d) throw config_error("theta length must equal model dimension");
  PopulationGrad out;
  switch (spec.kind) {
    case ModelKind::GaussianLocation:
      out.grad = spec.theta_star - theta;
      return out;
    case ModelKind::SingleIndex: {
      if (spec.theta_star.norm() != 0)
        throw config_error("population gradient for single-index requires theta_star = 0");
      const double r2 = theta.squaredNorm();
      const double coef = -spec.p * odd_double_factorial(spec.p) *
                          detail::int_pow(std::sqrt(r2), 2 * spec.p - 2);
      out.grad = coef * theta;
      return out;
    }
    case ModelKind::OverspecGmm: {
      if (spec.theta_star.norm() != 0)
        throw config_error("population gradient for gmm requires theta_star = 0");
      const double r = theta.norm();
      if (r == 0) {
        out.grad = VectorXd::Zero(spec.d);
        return out;
      }
      // E[X tanh(X.theta)] = (theta/r) E[Z tanh(r Z)] for X ~ N(0, I)
      const double m = normal_expectation([r](double z) { return z * std::tanh(r * z); },
                                          nodes_for_scale(r, cfg.quad_nodes));
      out.grad = theta * (m / r - 1.0);
      return out;
    }
    case ModelKind::Logistic: {
      if (cfg.mc_samples == 0)
        throw config_error("population gradient for logistic requires a Monte Carlo budget");
      PhiloxRng rng(cfg.seed, derive_stream(spec.fingerprint(), 0x9091));
      VectorXd x(spec.d), sum = VectorXd::Zero(spec.d), sumsq = VectorXd::Zero(spec.d);
      for (std::size_t k = 0; k < cfg.mc_samples; ++k) {
        for (int j = 0; j < spec.d; ++j) x(j) = rng.normal();
        const double s = x.dot(spec.theta_star);
        const double y = rng.uniform_co() < 1.0 / (1.0 + std::exp(-s)) ? 1.0 : -1.0;
        const double yt = y * x.dot(theta);
        const double e = std::exp(-std::abs(yt));
        const double sig = yt >= 0 ? e / (1.0 + e) : 1.0 / (1.0 + e);  // sigma(-yt)
        const VectorXd term = (y * sig) * x;
        sum += term;
        sumsq += term.cwiseProduct(term);
      }
      const auto m = static_cast<double>(cfg.mc_samples);
      out.grad = sum / m;
      const VectorXd var = (sumsq / m - out.grad.cwiseProduct(out.grad)).cwiseMax(0.0);
      out.mc_stderr = std::sqrt(var.sum() / m);
      return out;
    }
  }
  throw config_error("population_grad: unknown model kind");
}

inline VectorXd population_grad(const ModelSpec& spec, const VectorXd& theta,
                                const PopulationConfig& cfg = {}) {
  return population_grad_detail(spec, theta, cfg).grad;
}

inline VectorXd prior_log_grad(const PriorSpec& prior, const VectorXd& theta) {
  return prior.grad_log(theta);
}

inline double prior_concentration_bound(const PriorSpec& prior, const VectorXd& theta_star) {
  return prior.concentration_bound(theta_star);
}

}  // namespace contraction
