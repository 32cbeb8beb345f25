#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <tuple>
#include <utility>
#include <vector>

#include "bonet/dataset.hpp"
#include "bonet/deeponet.hpp"
#include "bonet/energy.hpp"
#include "bonet/rng.hpp"
#include "bonet/types.hpp"

namespace bonet {

// One overdamped Langevin step: theta - eta * grad + sqrt(2 tau eta) z with
// z ~ N(0, I) drawn coordinate-wise from the caller's stream. tau = 0 gives
// plain gradient descent.
ParamVector sgld_step(const ParamVector& theta, const ParamVector& grad, double eta, double tau,
                      NormalStream& rng);

enum class SigmaCorrection { Ema, Fixed, Off };

// Replica sampler settings. One epoch is one pass over the dataset, i.e.
// ceil(N / minibatch) iterations; every iteration steps both particles on a
// fresh minibatch and may attempt a swap. Test-set errors are recorded once
// per epoch.
struct SamplerConfig {
  long epochs = 2000;
  long burn_in_epochs = -1;  // -1: half of the epochs
  Index minibatch = 128;
  double tau1 = 0.01;
  double tau2 = 1.0;
  double eta1 = 1e-4;
  double eta2 = 1e-4;
  double a1 = 0.5;
  double a2 = 0.5;
  double control_c = 0.75;   // share of masked steps applied to the branch
  long ensemble_size = 50;
  long thinning = 0;         // 0: spread the ensemble over the final 10% of iterations
  int swap_interval = 1;     // attempt swaps every k-th iteration; 0 disables
  SigmaCorrection sigma_mode = SigmaCorrection::Ema;
  double sigma1_fixed = 0.0;
  double sigma2_fixed = 0.0;
  double ema_decay = 0.99;
  std::uint64_t seed = 0;
  // test hook: give both particles identical noise/batch streams
  bool shared_particle_streams = false;
};

// Iteration bookkeeping for the epoch-as-pass convention.
struct SamplerSchedule {
  long iterations_per_epoch = 1;
  long iterations = 0;
  long burn_in_iterations = 0;
  long thinning = 1;
};

// Resolves defaults (burn-in, thinning) and validates; throws ConfigError.
// The returned schedule expands epochs into iterations.
SamplerSchedule resolve_sampler_config(SamplerConfig& cfg, long dataset_size);

struct SwapRecord {
  long iteration;
  double r_hat;
  bool swapped;
};

struct Diagnostics {
  std::vector<double> e1;            // per epoch, on the test set
  std::vector<double> e2;
  std::vector<SwapRecord> swaps;
  std::vector<double> iter_seconds;  // sampling + swap work only
  long swap_count = 0;
};

// Retained low-temperature parameter snapshots, newest last.
struct PosteriorEnsemble {
  std::vector<ParamVector> samples;
  std::vector<long> provenance;  // iteration index of each snapshot
};

// The dropout prediction ensemble is materialized as parameter snapshots too
// (each stochastic forward pass equals a model with scaled-out units).
using DropoutEnsemble = PosteriorEnsemble;

// The last M snapshots of a parameter history, spaced `thinning` apart and
// anchored at the newest entry.
PosteriorEnsemble collect_ensemble(const std::vector<ParamVector>& theta1_history, long ensemble_size,
                                   long thinning);

std::pair<PosteriorEnsemble, Diagnostics> resgld_train(const DeepOnetModel& model_init,
                                                       const OperatorDataset& dataset,
                                                       const SamplerConfig& config,
                                                       const EnergySpec& energy_spec);

// Accelerated variant: after burn-in the high-temperature particle updates
// only one randomly chosen sub-network per step (branch with probability
// control_c), drawing no noise for the frozen block.
std::pair<PosteriorEnsemble, Diagnostics> m_resgld_train(const DeepOnetModel& model_init,
                                                         const OperatorDataset& dataset,
                                                         const SamplerConfig& config,
                                                         const EnergySpec& energy_spec);

struct AdamConfig {
  long epochs = 2000;
  Index minibatch = 128;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double dropout_rate = 0.05;
  long ensemble_size = 50;
  std::uint64_t seed = 0;
};

// Adam on the mean-square loss with dropout on all hidden layers; the
// uncertainty ensemble comes from stochastic forward passes at inference.
std::tuple<DeepOnetModel, DropoutEnsemble, Diagnostics> adam_dropout_train(
    const DeepOnetModel& model_init, const OperatorDataset& dataset, const AdamConfig& config);

// One Adam update with bias correction; `step` counts from 1.
void adam_update(ParamVector& theta, ParamVector& m_state, ParamVector& v_state,
                 const ParamVector& grad, double learning_rate, double beta1, double beta2,
                 double epsilon, long step);

// Ensemble persistence: "ensemble <M>" then M consecutive model checkpoints.
void save_ensemble(std::ostream& os, const DeepOnetModel& model_template,
                   const PosteriorEnsemble& ensemble);
std::pair<DeepOnetModel, PosteriorEnsemble> load_ensemble(std::istream& is);

namespace detail {

// Minimal interface the replica chain needs from an energy model. Estimates
// are stochastic through the explicit minibatch argument.
class StochasticEnergy {
 public:
  virtual ~StochasticEnergy() = default;
  virtual Index param_count() const = 0;
  virtual Index dataset_size() const = 0;
  virtual double energy(const ParamVector& theta, const std::vector<Index>& batch) = 0;
  // returns the energy estimate and writes the gradient restricted to `block`
  // (other entries zeroed)
  virtual double energy_and_grad(const ParamVector& theta, const std::vector<Index>& batch,
                                 ParamBlock block, ParamVector& grad) = 0;
  // [begin, end) of the coordinates `block` touches
  virtual std::pair<Index, Index> block_range(ParamBlock block) const = 0;
};

struct ChainOptions {
  long iterations = 0;
  long burn_in = 0;
  Index minibatch = 1;
  double tau1 = 0.01, tau2 = 1.0;
  double eta1 = 1e-4, eta2 = 1e-4;
  double a1 = 0.5, a2 = 0.5;
  double mask_c = -1.0;  // < 0: full updates for both particles
  long ensemble_size = 1;
  long thinning = 1;
  int swap_interval = 1;
  SigmaCorrection sigma_mode = SigmaCorrection::Ema;
  double sigma1_fixed = 0.0, sigma2_fixed = 0.0;
  double ema_decay = 0.99;
  std::uint64_t seed = 0;
  bool shared_particle_streams = false;
  bool record_timing = true;
  // called after every iteration, outside the timed window
  std::function<void(long iteration, const ParamVector& theta1, const ParamVector& theta2)>
      on_iteration;
};

struct ChainResult {
  PosteriorEnsemble ensemble;
  std::vector<SwapRecord> swaps;
  std::vector<double> iter_seconds;
  long swap_count = 0;
  ParamVector theta1;
  ParamVector theta2;
  std::uint64_t noise_draws1 = 0;
  std::uint64_t noise_draws2 = 0;
};

// Shared implementation of the replica-exchange chain; the trainers wrap it.
ChainResult run_replica_chain(StochasticEnergy& energy, const ParamVector& theta_init,
                              const ChainOptions& opt);

// Uniform minibatch of n distinct indices from [0, N), insertion order.
void sample_minibatch(UniformStream& rng, Index dataset_size, Index n, std::vector<Index>& out);

// Minibatch posterior energy of a DeepONet over a dataset; the adapter the
// trainers feed to the chain.
class DeepOnetEnergy final : public StochasticEnergy {
 public:
  DeepOnetEnergy(const DeepOnetModel& model_template, const OperatorDataset& dataset,
                 const EnergySpec& spec);

  Index param_count() const override { return total_params_; }
  Index dataset_size() const override;
  double energy(const ParamVector& theta, const std::vector<Index>& batch) override;
  double energy_and_grad(const ParamVector& theta, const std::vector<Index>& batch,
                         ParamBlock block, ParamVector& grad) override;
  std::pair<Index, Index> block_range(ParamBlock block) const override;

 private:
  double scale(std::size_t batch_size) const;
  void gather(const std::vector<Index>& batch);

  DeepOnetModel model_;  // workspace the flat vectors are unflattened into
  const OperatorDataset& dataset_;
  EnergySpec spec_;
  TrainingBatch scratch_;
  Index branch_params_ = 0;
  Index total_params_ = 0;
};

}  // namespace detail

}  // namespace bonet
