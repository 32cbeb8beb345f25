// Experiment runner: data generation, training with any of the three
// frameworks, band evaluation, and the sampler timing benchmark.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "bonet/experiment.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  long seed = -1;
  bool has_seed = false;
};

bonet::ExperimentConfig resolve_config(const CommonArgs& args) {
  bonet::KeyValues overrides;
  for (const std::string& kv : args.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw bonet::ConfigError("--set expects key=value, got '" + kv + "'");
    overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.has_seed) overrides.emplace_back("seed", std::to_string(args.seed));
  if (!args.out_dir.empty()) overrides.emplace_back("out_dir", args.out_dir);
  return bonet::load_config(args.config_path, overrides);
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")->required();
  cmd->add_option("--seed", args.seed, "override the config seed")->each([&args](const std::string&) {
    args.has_seed = true;
  });
  cmd->add_option("--out", args.out_dir, "output directory (overrides out_dir)");
  cmd->add_option("--set", args.sets, "override any config key, key=value")->take_all();
}

std::string default_dataset_path(const bonet::ExperimentConfig& cfg, const std::string& given) {
  if (!given.empty()) return given;
  return (std::filesystem::path(cfg.out_dir) / "dataset.txt").string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian operator-network training with replica-exchange Langevin samplers"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, bench_args;
  std::string method = "resgld";
  std::string data_path, eval_data_path, bench_data_path;
  std::string ensemble_path;
  long trajectory = 0;

  CLI::App* gen = app.add_subcommand("generate", "build and write a dataset");
  add_common(gen, gen_args);

  CLI::App* train = app.add_subcommand("train", "train with adam, resgld or m-resgld");
  add_common(train, train_args);
  train->add_option("--method", method, "adam | resgld | m-resgld");
  train->add_option("--data", data_path, "dataset file (default <out_dir>/dataset.txt)");

  CLI::App* eval = app.add_subcommand("evaluate", "write the prediction band of a test trajectory");
  add_common(eval, eval_args);
  eval->add_option("--data", eval_data_path, "dataset file (default <out_dir>/dataset.txt)");
  eval->add_option("--ensemble", ensemble_path, "ensemble checkpoint (default <out_dir>/ensemble.txt)");
  eval->add_option("--trajectory", trajectory, "test trajectory index");

  CLI::App* bench = app.add_subcommand("bench", "compare per-iteration cost of resgld and m-resgld");
  add_common(bench, bench_args);
  bench->add_option("--data", bench_data_path, "dataset file (default <out_dir>/dataset.txt)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      bonet::cmd_generate(resolve_config(gen_args));
    } else if (train->parsed()) {
      const bonet::ExperimentConfig cfg = resolve_config(train_args);
      bonet::cmd_train(cfg, bonet::method_from_name(method),
                       default_dataset_path(cfg, data_path));
    } else if (eval->parsed()) {
      const bonet::ExperimentConfig cfg = resolve_config(eval_args);
      if (ensemble_path.empty())
        ensemble_path = (std::filesystem::path(cfg.out_dir) / "ensemble.txt").string();
      bonet::cmd_evaluate(cfg, default_dataset_path(cfg, eval_data_path), ensemble_path,
                          trajectory);
    } else if (bench->parsed()) {
      const bonet::ExperimentConfig cfg = resolve_config(bench_args);
      bonet::cmd_bench(cfg, default_dataset_path(cfg, bench_data_path));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
