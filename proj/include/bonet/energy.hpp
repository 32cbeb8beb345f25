#pragma once

#include "bonet/deeponet.hpp"
#include "bonet/types.hpp"

namespace bonet {

enum class PriorKind { None, Gaussian };

// Parameters of the (unnormalized) negative log posterior. Additive terms
// that are constant in theta are dropped throughout.
struct EnergySpec {
  double noise_sigma = 0.01;           // known target noise std
  PriorKind prior = PriorKind::None;
  double prior_sigma = 1.0;
  Index dataset_size = 0;              // N, the full training set size
};

void validate_energy_spec(const EnergySpec& spec);

// 0 for the improper uniform prior, ||theta||^2 / (2 prior_sigma^2) otherwise.
double prior_term(const EnergySpec& spec, const Eigen::Ref<const ParamVector>& theta);

// full = true: the batch must be the whole dataset and U is returned.
// full = false: the minibatch estimator with the N/n prefactor.
double energy(const DeepOnetModel& model, const TrainingBatch& batch, const EnergySpec& spec,
              bool full);

// Gradient of the minibatch energy estimator: deeponet_grad at scale
// N/(n 2 sigma^2) plus the prior gradient, restricted to `block`.
ParamVector energy_grad(const DeepOnetModel& model, const TrainingBatch& batch,
                        const EnergySpec& spec, ParamBlock block = ParamBlock::Full);

// Unbiased replica-swap rate estimator. u1_at_* come from particle 1's energy
// estimator evaluated at the two parameter vectors, u2_at_* from particle 2's;
// sigma1/sigma2 are the estimator standard deviations. Returned unclamped:
// values above 1 mean a certain swap.
double swap_probability(double u1_at_theta1, double u1_at_theta2, double u2_at_theta1,
                        double u2_at_theta2, double tau1, double tau2, double a1, double a2,
                        double sigma1, double sigma2);

// Exponential moving statistics of the observed energy estimates; supplies
// the sigma inputs of swap_probability when they are not known a priori.
struct VarianceTracker {
  double ema_mean = 0.0;
  double ema_var = 0.0;
  double decay = 0.99;
  bool initialized = false;

  void update(double u_hat) {
    if (decay <= 0.0 || decay >= 1.0) throw ConfigError("variance tracker: decay must be in (0,1)");
    if (!initialized) {
      ema_mean = u_hat;
      ema_var = 0.0;
      initialized = true;
      return;
    }
    const double delta = u_hat - ema_mean;
    ema_mean += (1.0 - decay) * delta;
    ema_var = decay * (ema_var + (1.0 - decay) * delta * delta);
  }

  double std_dev() const { return std::sqrt(ema_var); }
};

inline VarianceTracker update_variance(VarianceTracker tracker, double u_hat) {
  tracker.update(u_hat);
  return tracker;
}

}  // namespace bonet
