#pragma once

#include <string>

#include "bonet/config.hpp"

namespace bonet {

enum class TrainMethod { Adam, Resgld, MResgld };

const char* method_name(TrainMethod m);
TrainMethod method_from_name(const std::string& name);

// Writes `content` to path atomically (temp file + rename).
void atomic_write_file(const std::string& path, const std::string& content);

// Generates the dataset and writes <out_dir>/dataset.txt plus the manifest.
// Returns the dataset path.
std::string cmd_generate(const ExperimentConfig& cfg);

struct TrainOutputs {
  std::string errors_csv;
  std::string timing_csv;
  std::string swaps_csv;   // replica methods only
  std::string model_file;
  std::string ensemble_file;
  double final_e1 = 0.0;
  double final_e2 = 0.0;
};

// Trains with one framework on an existing dataset file and writes the
// diagnostics CSVs, checkpoints and manifest into cfg.out_dir.
TrainOutputs cmd_train(const ExperimentConfig& cfg, TrainMethod method,
                       const std::string& dataset_path);

struct EvaluateOutputs {
  std::string band_csv;
  double e1 = 0.0;
  double e2 = 0.0;
  double e3 = 0.0;
};

// Prediction band and metrics for one held-out test trajectory.
EvaluateOutputs cmd_evaluate(const ExperimentConfig& cfg, const std::string& dataset_path,
                             const std::string& ensemble_path, long trajectory_index);

struct BenchOutputs {
  double mean_seconds_resgld = 0.0;
  double mean_seconds_mresgld = 0.0;
  double ratio = 0.0;
  std::string timing_resgld_csv;
  std::string timing_mresgld_csv;
};

// Fixed-budget timing comparison of the two replica samplers on identical
// data and seeds.
BenchOutputs cmd_bench(const ExperimentConfig& cfg, const std::string& dataset_path);

}  // namespace bonet
