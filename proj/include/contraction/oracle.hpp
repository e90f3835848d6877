#pragma once

#include <memory>
#include <optional>
#include <utility>

#include "contraction/models.hpp"

namespace contraction {

enum class EvalMode { SampleLoglik, PopulationLoglik, PosteriorDrift };

/// Deterministic gradient evaluator closed over a model, an optional dataset,
/// and an optional prior. Same inputs and seed give bit-identical outputs, so
/// oracles are safe to share across threads.
class GradOracle {
 public:
  GradOracle(ModelSpec spec, std::shared_ptr<const Dataset> data,
             std::optional<PriorSpec> prior, EvalMode mode, PopulationConfig pop_cfg = {})
      : spec_(std::move(spec)),
        data_(std::move(data)),
        prior_(std::move(prior)),
        mode_(mode),
        pop_cfg_(pop_cfg) {
    if (mode_ != EvalMode::PopulationLoglik && !data_)
      throw config_error("GradOracle: this evaluation mode requires a dataset");
    if (mode_ == EvalMode::PosteriorDrift && !prior_)
      throw config_error("GradOracle: posterior drift requires a prior");
  }

  static GradOracle sample(ModelSpec spec, std::shared_ptr<const Dataset> data) {
    return GradOracle(std::move(spec), std::move(data), std::nullopt, EvalMode::SampleLoglik);
  }
  static GradOracle population(ModelSpec spec, PopulationConfig cfg = {}) {
    return GradOracle(std::move(spec), nullptr, std::nullopt, EvalMode::PopulationLoglik, cfg);
  }
  static GradOracle posterior(ModelSpec spec, std::shared_ptr<const Dataset> data,
                              PriorSpec prior) {
    return GradOracle(std::move(spec), std::move(data), std::move(prior),
                      EvalMode::PosteriorDrift);
  }

  /// Gradient in the configured mode: grad F_n, grad F, or the diffusion drift
  /// (1/2) grad F_n + 1/(2n) grad log pi.
  VectorXd grad(const VectorXd& theta) const {
    switch (mode_) {
      case EvalMode::SampleLoglik:
        return sample_loglik_grad(spec_, *data_, theta);
      case EvalMode::PopulationLoglik:
        return population_grad(spec_, theta, pop_cfg_);
      case EvalMode::PosteriorDrift: {
        const double inv_n = 1.0 / static_cast<double>(data_->n);
        return 0.5 * sample_loglik_grad(spec_, *data_, theta) +
               (0.5 * inv_n) * prior_->grad_log(theta);
      }
    }
    throw config_error("GradOracle: unknown mode");
  }

  /// Unnormalized posterior log-density n F_n + log pi (posterior mode only).
  double log_target(const VectorXd& theta) const {
    if (mode_ != EvalMode::PosteriorDrift)
      throw config_error("GradOracle: log_target is defined for posterior drift mode");
    return static_cast<double>(data_->n) * sample_loglik(spec_, *data_, theta) +
           prior_->log_density(theta);
  }

  /// Posterior log-density and drift from one likelihood pass.
  std::pair<double, VectorXd> log_target_and_drift(const VectorXd& theta) const {
    if (mode_ != EvalMode::PosteriorDrift)
      throw config_error("GradOracle: log_target is defined for posterior drift mode");
    const auto vg = sample_loglik_and_grad(spec_, *data_, theta);
    const double inv_n = 1.0 / static_cast<double>(data_->n);
    const double lt = static_cast<double>(data_->n) * vg.value + prior_->log_density(theta);
    const VectorXd drift = 0.5 * vg.grad + (0.5 * inv_n) * prior_->grad_log(theta);
    return {lt, drift};
  }

  const ModelSpec& spec() const { return spec_; }
  const Dataset* data() const { return data_.get(); }
  const std::optional<PriorSpec>& prior() const { return prior_; }
  EvalMode mode() const { return mode_; }
  int dim() const { return spec_.d; }
  long sample_count() const { return data_ ? data_->n : 0; }

 private:
  ModelSpec spec_;
  std::shared_ptr<const Dataset> data_;
  std::optional<PriorSpec> prior_;
  EvalMode mode_;
  PopulationConfig pop_cfg_;
};

}  // namespace contraction
