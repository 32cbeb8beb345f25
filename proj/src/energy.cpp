#include "bonet/energy.hpp"

#include <cmath>

namespace bonet {

void validate_energy_spec(const EnergySpec& spec) {
  if (!(spec.noise_sigma > 0.0)) throw ConfigError("energy: noise sigma must be positive");
  if (spec.prior == PriorKind::Gaussian && !(spec.prior_sigma > 0.0))
    throw ConfigError("energy: prior sigma must be positive");
  if (spec.dataset_size < 1) throw ConfigError("energy: dataset size N must be at least 1");
}

double prior_term(const EnergySpec& spec, const Eigen::Ref<const ParamVector>& theta) {
  if (spec.prior == PriorKind::None) return 0.0;
  return theta.squaredNorm() / (2.0 * spec.prior_sigma * spec.prior_sigma);
}

double energy(const DeepOnetModel& model, const TrainingBatch& batch, const EnergySpec& spec,
              bool full) {
  validate_energy_spec(spec);
  if (batch.size() == 0) throw ConfigError("energy: empty batch");
  if (full && batch.size() != spec.dataset_size)
    throw ConfigError("energy: full=true requires the batch to be the whole dataset");
  if (batch.size() > spec.dataset_size)
    throw ConfigError("energy: minibatch larger than the dataset");

  const double prefactor =
      full ? 1.0 : static_cast<double>(spec.dataset_size) / static_cast<double>(batch.size());
  const double sum_sq = deeponet_sumsq(model, batch);
  double value = prefactor * sum_sq / (2.0 * spec.noise_sigma * spec.noise_sigma);
  if (spec.prior == PriorKind::Gaussian) value += prior_term(spec, deeponet_flatten(model));
  return value;
}

ParamVector energy_grad(const DeepOnetModel& model, const TrainingBatch& batch,
                        const EnergySpec& spec, ParamBlock block) {
  validate_energy_spec(spec);
  if (batch.size() == 0) throw ConfigError("energy_grad: empty batch");
  const double scale = static_cast<double>(spec.dataset_size) /
                       (static_cast<double>(batch.size()) * 2.0 * spec.noise_sigma *
                        spec.noise_sigma);
  ParamVector grad = deeponet_grad(model, batch, scale, block);
  if (spec.prior == PriorKind::Gaussian) {
    const ParamVector theta = deeponet_flatten(model);
    const double inv = 1.0 / (spec.prior_sigma * spec.prior_sigma);
    const Index nb = branch_param_count(model);
    if (block != ParamBlock::TrunkOnly) grad.head(nb) += inv * theta.head(nb);
    if (block != ParamBlock::BranchOnly)
      grad.tail(theta.size() - nb) += inv * theta.tail(theta.size() - nb);
  }
  return grad;
}

double swap_probability(double u1_at_theta1, double u1_at_theta2, double u2_at_theta1,
                        double u2_at_theta2, double tau1, double tau2, double a1, double a2,
                        double sigma1, double sigma2) {
  if (!(tau1 > 0.0) || tau1 > tau2)
    throw ConfigError("swap_probability: temperatures must satisfy 0 < tau1 <= tau2");
  if (!(a1 > 0.0) || !(a2 > 0.0) || std::abs(a1 + a2 - 1.0) > 1e-9)
    throw ConfigError("swap_probability: a1, a2 must be positive and sum to 1");
  if (sigma1 < 0.0 || sigma2 < 0.0)
    throw ConfigError("swap_probability: estimator deviations must be non-negative");

  const double tau_delta = 1.0 / tau1 - 1.0 / tau2;
  const double correction = a1 * sigma1 + a2 * sigma2;
  const double exponent =
      tau_delta * (a1 * (u1_at_theta1 - u1_at_theta2) + a2 * (u2_at_theta1 - u2_at_theta2) -
                   correction * correction * tau_delta);
  return std::exp(exponent);
}

}  // namespace bonet
