#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bonet/dataset.hpp"
#include "bonet/energy.hpp"
#include "bonet/samplers.hpp"
#include "bonet/types.hpp"

namespace bonet {

// Full experiment description: problem, data generation, architecture, and
// the settings of all three training frameworks. Loaded from a flat
// "key = value" file ('#' starts a comment); command-line overrides replace
// file values; everything has a default.
struct ExperimentConfig {
  // problem / data
  ProblemId problem = ProblemId::Antiderivative;
  double noise_sigma = 0.01;
  int sensors = 100;
  int query_dim = 1;
  long n_trajectories = 1000;
  long queries_per_trajectory = 100;
  long n_test = 100;
  double length_scale = 0.2;
  double jitter = 1e-10;
  SolverParams solver;

  // architecture
  int branch_width = 50;
  int branch_depth = 2;
  int trunk_width = 50;
  int trunk_depth = 2;
  int q = 50;
  Activation activation = Activation::Tanh;

  // shared training settings
  long epochs = 2000;
  Index minibatch = 128;
  std::uint64_t seed = 0;

  // replica samplers
  long burn_in_epochs = -1;
  double tau1 = 0.01;
  double tau2 = 1.0;
  double eta1 = 1e-4;
  double eta2 = 1e-4;
  double a1 = 0.5;
  double a2 = 0.5;
  double control_c = 0.75;
  long ensemble_size = 50;
  long thinning = 0;
  int swap_interval = 1;
  SigmaCorrection sigma_mode = SigmaCorrection::Ema;
  double sigma1_fixed = 0.0;
  double sigma2_fixed = 0.0;
  double ema_decay = 0.99;

  // prior
  PriorKind prior = PriorKind::None;
  double prior_sigma = 1.0;

  // adam baseline
  double adam_lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double dropout_rate = 0.05;

  // bench
  long bench_iterations = 200;
  double bench_c = 0.5;

  std::string out_dir = "out";

  DatasetOptions dataset_options() const;
  SamplerConfig sampler_config() const;
  AdamConfig adam_config() const;
  EnergySpec energy_spec(Index dataset_size) const;
  DeepOnetModel make_initial_model() const;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Parses "key = value" lines; '#' comments; blank lines skipped.
KeyValues parse_key_values(std::istream& is);
KeyValues parse_key_value_file(const std::string& path);

// Applies entries onto a config; unknown keys raise ConfigError.
void apply_key_values(ExperimentConfig& cfg, const KeyValues& entries);

ExperimentConfig load_config(const std::string& path, const KeyValues& overrides = {});

// Resolved configuration, one sorted "key = value" per line; enough to
// reproduce the run together with the seed.
void write_manifest(std::ostream& os, const ExperimentConfig& cfg);

}  // namespace bonet
