#include "bonet/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "bonet/metrics.hpp"

namespace bonet {

namespace {

// substream kinds; dataset generation uses 2..5
constexpr std::uint64_t kStreamParticle1Noise = 0x10;
constexpr std::uint64_t kStreamParticle2Noise = 0x11;
constexpr std::uint64_t kStreamParticle1Batch = 0x12;
constexpr std::uint64_t kStreamParticle2Batch = 0x13;
constexpr std::uint64_t kStreamMask = 0x14;
constexpr std::uint64_t kStreamSwap = 0x15;
constexpr std::uint64_t kStreamAdamBatch = 0x16;
constexpr std::uint64_t kStreamAdamDropout = 0x17;
constexpr std::uint64_t kStreamAdamInference = 0x18;

std::uint64_t stream_id(std::uint64_t kind) { return kind << 40; }

using Clock = std::chrono::steady_clock;

}  // namespace

ParamVector sgld_step(const ParamVector& theta, const ParamVector& grad, double eta, double tau,
                      NormalStream& rng) {
  if (!(eta > 0.0)) throw ConfigError("sgld_step: eta must be positive");
  if (tau < 0.0) throw ConfigError("sgld_step: tau must be non-negative");
  if (grad.size() != theta.size()) throw ShapeError("sgld_step: gradient length mismatch");
  const double noise_scale = std::sqrt(2.0 * tau * eta);
  ParamVector next(theta.size());
  for (Index i = 0; i < theta.size(); ++i)
    next[i] = theta[i] - eta * grad[i] + noise_scale * rng.next();
  if (!next.allFinite()) throw NumericError("sgld_step: non-finite parameter update");
  return next;
}

namespace detail {

void sample_minibatch(UniformStream& rng, Index dataset_size, Index n, std::vector<Index>& out) {
  out.clear();
  if (n > dataset_size) throw ConfigError("minibatch larger than the dataset");
  if (n == dataset_size) {
    out.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = i;
    return;
  }
  // Floyd's algorithm: n distinct indices, deterministic draw count
  std::unordered_set<Index> seen;
  seen.reserve(static_cast<std::size_t>(n) * 2);
  for (Index j = dataset_size - n; j < dataset_size; ++j) {
    const Index t = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(j) + 1));
    if (seen.insert(t).second) {
      out.push_back(t);
    } else {
      seen.insert(j);
      out.push_back(j);
    }
  }
}

// In-place Langevin update restricted to [begin, end); noise is drawn only
// for the active coordinates.
static void sgld_step_range(ParamVector& theta, const ParamVector& grad, double eta, double tau,
                            NormalStream& rng, Index begin, Index end, long iteration,
                            int particle) {
  const double noise_scale = std::sqrt(2.0 * tau * eta);
  bool finite = true;
  for (Index i = begin; i < end; ++i) {
    theta[i] += -eta * grad[i] + noise_scale * rng.next();
    finite = finite && std::isfinite(theta[i]);
  }
  if (!finite)
    throw NumericError("sgld step diverged (non-finite parameters): particle " +
                       std::to_string(particle) + ", iteration " + std::to_string(iteration));
}

void validate_chain_options(const ChainOptions& opt, Index dataset_size) {
  if (opt.iterations < 1) throw ConfigError("sampler: need at least one iteration");
  if (opt.burn_in < 0 || opt.burn_in > opt.iterations)
    throw ConfigError("sampler: burn-in must lie within the iteration budget");
  if (opt.minibatch < 1 || opt.minibatch > dataset_size)
    throw ConfigError("sampler: minibatch must be in [1, N]");
  if (!(opt.tau1 > 0.0) || opt.tau1 > opt.tau2)
    throw ConfigError("sampler: temperatures must satisfy 0 < tau1 <= tau2");
  if (!(opt.eta1 > 0.0) || !(opt.eta2 > 0.0))
    throw ConfigError("sampler: step sizes must be positive");
  if (!(opt.a1 > 0.0) || !(opt.a2 > 0.0) || std::abs(opt.a1 + opt.a2 - 1.0) > 1e-9)
    throw ConfigError("sampler: a1, a2 must be positive and sum to 1");
  if (opt.mask_c > 1.0) throw ConfigError("sampler: control parameter c must be in [0,1]");
  if (opt.ensemble_size < 1) throw ConfigError("sampler: ensemble size must be >= 1");
  if (opt.thinning < 1) throw ConfigError("sampler: thinning must be >= 1");
  if (opt.swap_interval < 0) throw ConfigError("sampler: swap interval must be >= 0");
  const long post = opt.iterations - opt.burn_in;
  if (opt.ensemble_size * opt.thinning > post)
    throw ConfigError(
        "sampler: ensemble_size * thinning exceeds the post-burn-in iterations; no samples could "
        "be recorded");
  if (!(opt.ema_decay > 0.0) || !(opt.ema_decay < 1.0))
    throw ConfigError("sampler: ema decay must be in (0,1)");
}

ChainResult run_replica_chain(StochasticEnergy& energy, const ParamVector& theta_init,
                              const ChainOptions& opt) {
  validate_chain_options(opt, energy.dataset_size());
  if (theta_init.size() != energy.param_count())
    throw ShapeError("sampler: initial parameter vector length mismatch");

  NormalStream noise1(derive_seed(opt.seed, stream_id(kStreamParticle1Noise)));
  NormalStream noise2(derive_seed(
      opt.seed, stream_id(opt.shared_particle_streams ? kStreamParticle1Noise
                                                      : kStreamParticle2Noise)));
  UniformStream batch1(derive_seed(opt.seed, stream_id(kStreamParticle1Batch)));
  UniformStream batch2(derive_seed(
      opt.seed, stream_id(opt.shared_particle_streams ? kStreamParticle1Batch
                                                      : kStreamParticle2Batch)));
  UniformStream mask_rng(derive_seed(opt.seed, stream_id(kStreamMask)));
  UniformStream swap_rng(derive_seed(opt.seed, stream_id(kStreamSwap)));

  ChainResult result;
  result.theta1 = theta_init;
  result.theta2 = theta_init;
  result.ensemble.samples.resize(static_cast<std::size_t>(opt.ensemble_size));
  result.ensemble.provenance.assign(static_cast<std::size_t>(opt.ensemble_size), -1);

  VarianceTracker tracker1{0.0, 0.0, opt.ema_decay, false};
  VarianceTracker tracker2{0.0, 0.0, opt.ema_decay, false};

  const auto [full_begin, full_end] = energy.block_range(ParamBlock::Full);
  ParamVector grad1(theta_init.size()), grad2(theta_init.size());
  std::vector<Index> mb1, mb2;

  const long post = opt.iterations - opt.burn_in;
  if (opt.record_timing) result.iter_seconds.reserve(static_cast<std::size_t>(opt.iterations));

  for (long k = 0; k < opt.iterations; ++k) {
    const auto t_start = Clock::now();

    sample_minibatch(batch1, energy.dataset_size(), opt.minibatch, mb1);
    sample_minibatch(batch2, energy.dataset_size(), opt.minibatch, mb2);

    // particle 2's masked regime starts after burn-in
    ParamBlock block2 = ParamBlock::Full;
    if (opt.mask_c >= 0.0 && k >= opt.burn_in) {
      const double gamma = mask_rng.next();
      block2 = gamma < opt.mask_c ? ParamBlock::BranchOnly : ParamBlock::TrunkOnly;
    }

    const double u1_at_1 = energy.energy_and_grad(result.theta1, mb1, ParamBlock::Full, grad1);
    const double u2_at_2 = energy.energy_and_grad(result.theta2, mb2, block2, grad2);

    // swap decision from the energies at the current parameters; the
    // exchange itself applies to the freshly stepped vectors below
    bool do_swap = false;
    double r_hat = 0.0;
    const bool attempt =
        opt.swap_interval > 0 && (k % opt.swap_interval == 0);
    if (attempt) {
      tracker1.update(u1_at_1);
      tracker2.update(u2_at_2);
      const double u1_at_2 = energy.energy(result.theta2, mb1);
      const double u2_at_1 = energy.energy(result.theta1, mb2);
      double sigma1 = 0.0, sigma2 = 0.0;
      if (opt.sigma_mode == SigmaCorrection::Ema) {
        sigma1 = tracker1.std_dev();
        sigma2 = tracker2.std_dev();
      } else if (opt.sigma_mode == SigmaCorrection::Fixed) {
        sigma1 = opt.sigma1_fixed;
        sigma2 = opt.sigma2_fixed;
      }
      r_hat = swap_probability(u1_at_1, u1_at_2, u2_at_1, u2_at_2, opt.tau1, opt.tau2, opt.a1,
                               opt.a2, sigma1, sigma2);
      do_swap = swap_rng.next() < r_hat;
    }

    sgld_step_range(result.theta1, grad1, opt.eta1, opt.tau1, noise1, full_begin, full_end, k, 1);
    const auto [block_begin, block_end] = energy.block_range(block2);
    sgld_step_range(result.theta2, grad2, opt.eta2, opt.tau2, noise2, block_begin, block_end, k,
                    2);

    if (attempt) {
      if (do_swap) {
        result.theta1.swap(result.theta2);
        ++result.swap_count;
      }
      result.swaps.push_back({k, r_hat, do_swap});
    }

    if (opt.record_timing) {
      const std::chrono::duration<double> dt = Clock::now() - t_start;
      result.iter_seconds.push_back(dt.count());
    }

    // ensemble snapshots: low-temperature particle, spaced `thinning` apart,
    // anchored at the final iteration
    if (k >= opt.burn_in) {
      const long ip = k - opt.burn_in;
      const long from_end = post - 1 - ip;
      if (from_end % opt.thinning == 0) {
        const long j = from_end / opt.thinning;
        if (j < opt.ensemble_size) {
          const std::size_t slot = static_cast<std::size_t>(opt.ensemble_size - 1 - j);
          result.ensemble.samples[slot] = result.theta1;
          result.ensemble.provenance[slot] = k;
        }
      }
    }

    if (opt.on_iteration) opt.on_iteration(k, result.theta1, result.theta2);
  }

  result.noise_draws1 = noise1.draws();
  result.noise_draws2 = noise2.draws();
  return result;
}

}  // namespace detail

SamplerSchedule resolve_sampler_config(SamplerConfig& cfg, long dataset_size) {
  if (cfg.epochs < 1) throw ConfigError("sampler: epochs must be >= 1");
  if (cfg.minibatch < 1) throw ConfigError("sampler: minibatch must be >= 1");
  if (cfg.burn_in_epochs < 0) cfg.burn_in_epochs = cfg.epochs / 2;
  if (cfg.burn_in_epochs > cfg.epochs)
    throw ConfigError("sampler: burn-in exceeds the epoch budget");

  SamplerSchedule sched;
  sched.iterations_per_epoch = (dataset_size + cfg.minibatch - 1) / cfg.minibatch;
  sched.iterations = cfg.epochs * sched.iterations_per_epoch;
  sched.burn_in_iterations = cfg.burn_in_epochs * sched.iterations_per_epoch;
  if (cfg.thinning == 0) {
    // spread the ensemble over the final tenth of the iterations
    const long window = std::max(cfg.ensemble_size, sched.iterations / 10);
    sched.thinning = std::max(1L, window / cfg.ensemble_size);
  } else {
    sched.thinning = cfg.thinning;
  }

  detail::ChainOptions probe;  // reuse the chain validation
  probe.iterations = sched.iterations;
  probe.burn_in = sched.burn_in_iterations;
  probe.minibatch = cfg.minibatch;
  probe.tau1 = cfg.tau1;
  probe.tau2 = cfg.tau2;
  probe.eta1 = cfg.eta1;
  probe.eta2 = cfg.eta2;
  probe.a1 = cfg.a1;
  probe.a2 = cfg.a2;
  probe.ensemble_size = cfg.ensemble_size;
  probe.thinning = sched.thinning;
  probe.swap_interval = cfg.swap_interval;
  probe.ema_decay = cfg.ema_decay;
  if (cfg.control_c < 0.0 || cfg.control_c > 1.0)
    throw ConfigError("sampler: control parameter c must be in [0,1]");
  detail::validate_chain_options(probe, dataset_size);
  return sched;
}

namespace detail {

DeepOnetEnergy::DeepOnetEnergy(const DeepOnetModel& model_template, const OperatorDataset& dataset,
                               const EnergySpec& spec)
    : model_(model_template), dataset_(dataset), spec_(spec) {
  validate_energy_spec(spec_);
  if (spec_.dataset_size != dataset.train.size())
    throw ConfigError("energy spec N does not match the dataset size");
  branch_params_ = branch_param_count(model_);
  total_params_ = deeponet_param_count(model_);
}

Index DeepOnetEnergy::dataset_size() const { return dataset_.train.size(); }

double DeepOnetEnergy::energy(const ParamVector& theta, const std::vector<Index>& batch) {
  deeponet_unflatten(model_, theta);
  gather(batch);
  const double sum_sq = deeponet_sumsq(model_, scratch_);
  return scale(batch.size()) * sum_sq + prior_term(spec_, theta);
}

double DeepOnetEnergy::energy_and_grad(const ParamVector& theta, const std::vector<Index>& batch,
                                       ParamBlock block, ParamVector& grad) {
  deeponet_unflatten(model_, theta);
  gather(batch);
  double sum_sq = 0.0;
  grad = deeponet_sumsq_and_grad(model_, scratch_, scale(batch.size()), block, sum_sq);
  if (spec_.prior == PriorKind::Gaussian) {
    const double inv = 1.0 / (spec_.prior_sigma * spec_.prior_sigma);
    const auto [b, e] = block_range(block);
    grad.segment(b, e - b) += inv * theta.segment(b, e - b);
  }
  return scale(batch.size()) * sum_sq + prior_term(spec_, theta);
}

std::pair<Index, Index> DeepOnetEnergy::block_range(ParamBlock block) const {
  switch (block) {
    case ParamBlock::BranchOnly: return {0, branch_params_};
    case ParamBlock::TrunkOnly: return {branch_params_, total_params_};
    case ParamBlock::Full: break;
  }
  return {0, total_params_};
}

double DeepOnetEnergy::scale(std::size_t batch_size) const {
  return static_cast<double>(spec_.dataset_size) /
         (static_cast<double>(batch_size) * 2.0 * spec_.noise_sigma * spec_.noise_sigma);
}

void DeepOnetEnergy::gather(const std::vector<Index>& batch) {
  const Index n = static_cast<Index>(batch.size());
  scratch_.u_disc.resize(n, dataset_.train.u_disc.cols());
  scratch_.y.resize(n, dataset_.train.y.cols());
  scratch_.targets.resize(n);
  for (Index i = 0; i < n; ++i) {
    const Index r = batch[static_cast<std::size_t>(i)];
    scratch_.u_disc.row(i) = dataset_.train.u_disc.row(r);
    scratch_.y.row(i) = dataset_.train.y.row(r);
    scratch_.targets[i] = dataset_.train.targets[r];
  }
}

}  // namespace detail

namespace {

std::pair<PosteriorEnsemble, Diagnostics> replica_train(const DeepOnetModel& model_init,
                                                        const OperatorDataset& dataset,
                                                        const SamplerConfig& config,
                                                        const EnergySpec& energy_spec,
                                                        bool masked) {
  validate_model(model_init);
  SamplerConfig cfg = config;
  const SamplerSchedule sched = resolve_sampler_config(cfg, dataset.train.size());

  detail::DeepOnetEnergy energy(model_init, dataset, energy_spec);
  DeepOnetModel eval_model = model_init;

  Diagnostics diag;
  diag.e1.reserve(static_cast<std::size_t>(cfg.epochs));
  diag.e2.reserve(static_cast<std::size_t>(cfg.epochs));

  detail::ChainOptions opt;
  opt.iterations = sched.iterations;
  opt.burn_in = sched.burn_in_iterations;
  opt.minibatch = cfg.minibatch;
  opt.tau1 = cfg.tau1;
  opt.tau2 = cfg.tau2;
  opt.eta1 = cfg.eta1;
  opt.eta2 = cfg.eta2;
  opt.a1 = cfg.a1;
  opt.a2 = cfg.a2;
  opt.mask_c = masked ? cfg.control_c : -1.0;
  opt.ensemble_size = cfg.ensemble_size;
  opt.thinning = sched.thinning;
  opt.swap_interval = cfg.swap_interval;
  opt.sigma_mode = cfg.sigma_mode;
  opt.sigma1_fixed = cfg.sigma1_fixed;
  opt.sigma2_fixed = cfg.sigma2_fixed;
  opt.ema_decay = cfg.ema_decay;
  opt.seed = cfg.seed;
  opt.shared_particle_streams = cfg.shared_particle_streams;
  opt.on_iteration = [&](long k, const ParamVector& theta1, const ParamVector&) {
    if ((k + 1) % sched.iterations_per_epoch != 0) return;  // end of a pass
    deeponet_unflatten(eval_model, theta1);
    const auto [e1, e2] = evaluate_test_errors(eval_model, dataset);
    diag.e1.push_back(e1);
    diag.e2.push_back(e2);
  };

  detail::ChainResult result = detail::run_replica_chain(energy, deeponet_flatten(model_init), opt);
  diag.swaps = std::move(result.swaps);
  diag.iter_seconds = std::move(result.iter_seconds);
  diag.swap_count = result.swap_count;
  return {std::move(result.ensemble), std::move(diag)};
}

}  // namespace

std::pair<PosteriorEnsemble, Diagnostics> resgld_train(const DeepOnetModel& model_init,
                                                       const OperatorDataset& dataset,
                                                       const SamplerConfig& config,
                                                       const EnergySpec& energy_spec) {
  return replica_train(model_init, dataset, config, energy_spec, false);
}

std::pair<PosteriorEnsemble, Diagnostics> m_resgld_train(const DeepOnetModel& model_init,
                                                         const OperatorDataset& dataset,
                                                         const SamplerConfig& config,
                                                         const EnergySpec& energy_spec) {
  return replica_train(model_init, dataset, config, energy_spec, true);
}

PosteriorEnsemble collect_ensemble(const std::vector<ParamVector>& theta1_history,
                                   long ensemble_size, long thinning) {
  if (ensemble_size < 1 || thinning < 1)
    throw ConfigError("collect_ensemble: ensemble size and thinning must be >= 1");
  const long len = static_cast<long>(theta1_history.size());
  if (len < 1 + (ensemble_size - 1) * thinning)
    throw ConfigError("collect_ensemble: history too short for the requested ensemble");
  PosteriorEnsemble out;
  out.samples.resize(static_cast<std::size_t>(ensemble_size));
  out.provenance.resize(static_cast<std::size_t>(ensemble_size));
  for (long j = 0; j < ensemble_size; ++j) {
    const long idx = len - 1 - (ensemble_size - 1 - j) * thinning;
    out.samples[static_cast<std::size_t>(j)] = theta1_history[static_cast<std::size_t>(idx)];
    out.provenance[static_cast<std::size_t>(j)] = idx;
  }
  return out;
}

void adam_update(ParamVector& theta, ParamVector& m_state, ParamVector& v_state,
                 const ParamVector& grad, double learning_rate, double beta1, double beta2,
                 double epsilon, long step) {
  m_state = beta1 * m_state + (1.0 - beta1) * grad;
  v_state = beta2 * v_state + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  theta -= (learning_rate / corr1) *
           (m_state.array() / ((v_state.array() / corr2).sqrt() + epsilon)).matrix();
}

std::tuple<DeepOnetModel, DropoutEnsemble, Diagnostics> adam_dropout_train(
    const DeepOnetModel& model_init, const OperatorDataset& dataset, const AdamConfig& config) {
  validate_model(model_init);
  if (config.epochs < 1) throw ConfigError("adam: epochs must be >= 1");
  if (config.minibatch < 1 || config.minibatch > dataset.train.size())
    throw ConfigError("adam: minibatch must be in [1, N]");
  if (config.dropout_rate < 0.0 || config.dropout_rate >= 1.0)
    throw ConfigError("adam: dropout rate must be in [0, 1)");
  if (config.ensemble_size < 1) throw ConfigError("adam: ensemble size must be >= 1");

  DeepOnetModel model = model_init;
  const Index nb = branch_param_count(model);
  const Index np = deeponet_param_count(model);
  ParamVector theta = deeponet_flatten(model);
  ParamVector m = ParamVector::Zero(np);
  ParamVector v = ParamVector::Zero(np);

  UniformStream batch_rng(derive_seed(config.seed, stream_id(kStreamAdamBatch)));
  UniformStream dropout_rng(derive_seed(config.seed, stream_id(kStreamAdamDropout)));

  // epoch-as-pass convention shared with the replica trainers
  const long iters_per_epoch =
      (dataset.train.size() + config.minibatch - 1) / config.minibatch;
  const long iterations = config.epochs * iters_per_epoch;

  Diagnostics diag;
  diag.e1.reserve(static_cast<std::size_t>(config.epochs));
  diag.e2.reserve(static_cast<std::size_t>(config.epochs));
  diag.iter_seconds.reserve(static_cast<std::size_t>(iterations));

  std::vector<Index> batch;
  TrainingBatch sub;
  const double keep = 1.0 - config.dropout_rate;

  auto draw_masks = [&](const Mlp& net, Index rows) {
    std::vector<Matrix> masks;
    for (Index l = 0; l + 1 < net.layer_count(); ++l) {
      Matrix mk(rows, net.layer_dims[static_cast<std::size_t>(l) + 1]);
      for (Index r = 0; r < mk.rows(); ++r)
        for (Index c = 0; c < mk.cols(); ++c)
          mk(r, c) = dropout_rng.next() < config.dropout_rate ? 0.0 : 1.0 / keep;
      masks.push_back(std::move(mk));
    }
    return masks;
  };

  for (long k = 0; k < iterations; ++k) {
    const auto t_start = Clock::now();

    detail::sample_minibatch(batch_rng, dataset.train.size(), config.minibatch, batch);
    const Index n = static_cast<Index>(batch.size());
    sub.u_disc.resize(n, dataset.train.u_disc.cols());
    sub.y.resize(n, dataset.train.y.cols());
    sub.targets.resize(n);
    for (Index i = 0; i < n; ++i) {
      const Index r = batch[static_cast<std::size_t>(i)];
      sub.u_disc.row(i) = dataset.train.u_disc.row(r);
      sub.y.row(i) = dataset.train.y.row(r);
      sub.targets[i] = dataset.train.targets[r];
    }

    const std::vector<Matrix> branch_masks = draw_masks(model.branch, n);
    const std::vector<Matrix> trunk_masks = draw_masks(model.trunk, n);

    MlpTape branch_tape, trunk_tape;
    const Matrix& b = mlp_forward_tape(model.branch, sub.u_disc, &branch_masks, branch_tape);
    const Matrix& t = mlp_forward_tape(model.trunk, sub.y, &trunk_masks, trunk_tape);
    const Vector r = (b.array() * t.array()).rowwise().sum().matrix() - sub.targets;

    // gradient of the mean-square loss
    const Vector w = (2.0 / static_cast<double>(n)) * r;
    ParamVector grad(np);
    grad.head(nb) = mlp_backward_tape(model.branch, branch_tape,
                                      t.array().colwise() * w.array(), &branch_masks);
    grad.tail(np - nb) = mlp_backward_tape(model.trunk, trunk_tape,
                                           b.array().colwise() * w.array(), &trunk_masks);

    adam_update(theta, m, v, grad, config.learning_rate, config.beta1, config.beta2,
                config.epsilon, k + 1);
    if (!theta.allFinite())
      throw NumericError("adam diverged (non-finite parameters) at iteration " + std::to_string(k));
    deeponet_unflatten(model, theta);

    const std::chrono::duration<double> dt = Clock::now() - t_start;
    diag.iter_seconds.push_back(dt.count());

    if ((k + 1) % iters_per_epoch == 0) {
      const auto [e1, e2] = evaluate_test_errors(model, dataset);
      diag.e1.push_back(e1);
      diag.e2.push_back(e2);
    }
  }

  // materialize the inference-time dropout ensemble: scaling the surviving
  // hidden units into the next layer's weights makes each stochastic forward
  // pass an ordinary parameter snapshot
  UniformStream inference_rng(derive_seed(config.seed, stream_id(kStreamAdamInference)));
  DropoutEnsemble ensemble;
  ensemble.samples.reserve(static_cast<std::size_t>(config.ensemble_size));
  for (long s = 0; s < config.ensemble_size; ++s) {
    DeepOnetModel member = model;
    for (Mlp* net : {&member.branch, &member.trunk}) {
      for (Index l = 0; l + 1 < net->layer_count(); ++l) {
        Matrix& next_w = net->weights[static_cast<std::size_t>(l) + 1];
        for (Index unit = 0; unit < net->layer_dims[static_cast<std::size_t>(l) + 1]; ++unit) {
          const double scale = inference_rng.next() < config.dropout_rate ? 0.0 : 1.0 / keep;
          next_w.col(unit) *= scale;
        }
      }
    }
    ensemble.samples.push_back(deeponet_flatten(member));
    ensemble.provenance.push_back(s);
  }
  return {std::move(model), std::move(ensemble), std::move(diag)};
}

void save_ensemble(std::ostream& os, const DeepOnetModel& model_template,
                   const PosteriorEnsemble& ensemble) {
  os << "ensemble " << ensemble.samples.size() << '\n';
  DeepOnetModel model = model_template;
  for (const ParamVector& theta : ensemble.samples) {
    deeponet_unflatten(model, theta);
    save_deeponet(os, model);
  }
}

std::pair<DeepOnetModel, PosteriorEnsemble> load_ensemble(std::istream& is) {
  std::string tag;
  long count = 0;
  if (!(is >> tag >> count) || tag != "ensemble" || count < 1)
    throw IoError("ensemble: bad header");
  PosteriorEnsemble ensemble;
  ensemble.samples.reserve(static_cast<std::size_t>(count));
  DeepOnetModel first;
  for (long i = 0; i < count; ++i) {
    DeepOnetModel model = load_deeponet(is);
    if (i == 0) first = model;
    ensemble.samples.push_back(deeponet_flatten(model));
    ensemble.provenance.push_back(i);
  }
  return {std::move(first), std::move(ensemble)};
}

}  // namespace bonet
