#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bonet/experiment.hpp"
#include "bonet/metrics.hpp"

using namespace bonet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::path("cli_scratch") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig tiny_config(const std::string& out_dir, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.sensors = 16;
  cfg.n_trajectories = 6;
  cfg.queries_per_trajectory = 5;
  cfg.n_test = 4;
  cfg.noise_sigma = 0.01;
  cfg.branch_width = 8;
  cfg.branch_depth = 2;
  cfg.trunk_width = 8;
  cfg.trunk_depth = 2;
  cfg.q = 6;
  cfg.epochs = 30;
  cfg.burn_in_epochs = 10;
  cfg.minibatch = 10;
  cfg.tau1 = 1e-6;
  cfg.tau2 = 1e-4;
  cfg.eta1 = 1e-9;
  cfg.eta2 = 1e-9;
  cfg.ensemble_size = 4;
  cfg.thinning = 0;
  cfg.seed = seed;
  cfg.out_dir = out_dir;
  cfg.bench_iterations = 12;
  return cfg;
}

}  // namespace

TEST_CASE("key=value parsing handles comments, whitespace and errors") {
  std::stringstream ss("# a comment\n  tau1 =  0.25 # trailing\n\nproblem= pendulum\n");
  const KeyValues kv = parse_key_values(ss);
  REQUIRE(kv.size() == 2);
  CHECK(kv[0].first == "tau1");
  CHECK(kv[0].second == "0.25");
  CHECK(kv[1].second == "pendulum");

  ExperimentConfig cfg;
  apply_key_values(cfg, kv);
  CHECK(cfg.tau1 == 0.25);
  CHECK(cfg.problem == ProblemId::Pendulum);

  std::stringstream bad("tau1 0.25\n");
  CHECK_THROWS_AS(parse_key_values(bad), ConfigError);
  CHECK_THROWS_AS(apply_key_values(cfg, {{"no_such_key", "1"}}), ConfigError);
  CHECK_THROWS_AS(apply_key_values(cfg, {{"tau1", "abc"}}), ConfigError);
}

TEST_CASE("manifest round trip reproduces the configuration") {
  ExperimentConfig cfg = tiny_config("x", 77);
  cfg.problem = ProblemId::DiffusionReaction;
  cfg.sigma_mode = SigmaCorrection::Fixed;
  cfg.sigma1_fixed = 0.125;
  cfg.control_c = 0.6;

  std::stringstream ss;
  write_manifest(ss, cfg);
  ExperimentConfig other;
  KeyValues kv = parse_key_values(ss);
  // drop keys the manifest adds beyond the config fields (none today)
  apply_key_values(other, kv);

  std::stringstream again;
  write_manifest(again, other);
  std::stringstream first;
  write_manifest(first, cfg);
  CHECK(again.str() == first.str());
}

TEST_CASE("cmd_generate writes a loadable dataset deterministically") {
  const fs::path dir_a = fresh_dir("gen_a");
  const fs::path dir_b = fresh_dir("gen_b");
  ExperimentConfig a = tiny_config(dir_a.string(), 5);
  ExperimentConfig b = tiny_config(dir_b.string(), 5);

  const std::string path_a = cmd_generate(a);
  const std::string path_b = cmd_generate(b);
  CHECK(slurp(path_a) == slurp(path_b));

  const OperatorDataset data = load_dataset_file(path_a);
  CHECK(data.train.size() == 30);
  CHECK(data.test_u.rows() == 4);
}

TEST_CASE("cmd_train with zero epochs writes the initial checkpoint and empty diagnostics") {
  const fs::path dir = fresh_dir("train_zero");
  ExperimentConfig cfg = tiny_config(dir.string(), 6);
  const std::string data_path = cmd_generate(cfg);
  cfg.epochs = 0;
  const TrainOutputs out = cmd_train(cfg, TrainMethod::Resgld, data_path);
  CHECK(slurp(out.errors_csv) == "epoch,e1,e2\n");
  CHECK(slurp(out.swaps_csv) == "iteration,r_hat,swapped\n");
  std::ifstream is(out.model_file);
  const DeepOnetModel model = load_deeponet(is);
  CHECK(deeponet_flatten(model) == deeponet_flatten(cfg.make_initial_model()));
  CHECK(!fs::exists(out.ensemble_file));
}

TEST_CASE("cmd_train is byte-deterministic for every method") {
  const fs::path dir_a = fresh_dir("train_a");
  const fs::path dir_b = fresh_dir("train_b");
  ExperimentConfig a = tiny_config(dir_a.string(), 7);
  ExperimentConfig b = tiny_config(dir_b.string(), 7);
  const std::string data_a = cmd_generate(a);
  const std::string data_b = cmd_generate(b);

  for (TrainMethod method : {TrainMethod::Adam, TrainMethod::Resgld, TrainMethod::MResgld}) {
    const TrainOutputs oa = cmd_train(a, method, data_a);
    const TrainOutputs ob = cmd_train(b, method, data_b);
    CHECK(slurp(oa.errors_csv) == slurp(ob.errors_csv));
    CHECK(slurp(oa.ensemble_file) == slurp(ob.ensemble_file));
    if (method != TrainMethod::Adam) CHECK(slurp(oa.swaps_csv) == slurp(ob.swaps_csv));
  }
}

TEST_CASE("cmd_evaluate: identical members collapse the band and e3 survives a csv round trip") {
  const fs::path dir = fresh_dir("evaluate");
  ExperimentConfig cfg = tiny_config(dir.string(), 8);
  const std::string data_path = cmd_generate(cfg);

  // hand-build an ensemble of identical members
  const DeepOnetModel model = cfg.make_initial_model();
  PosteriorEnsemble ensemble;
  for (int i = 0; i < 3; ++i) {
    ensemble.samples.push_back(deeponet_flatten(model));
    ensemble.provenance.push_back(i);
  }
  const std::string ens_path = (dir / "ensemble.txt").string();
  {
    std::ofstream os(ens_path);
    save_ensemble(os, model, ensemble);
  }

  const EvaluateOutputs out = cmd_evaluate(cfg, data_path, ens_path, 1);
  CHECK(out.e3 >= 0.0);

  // parse band.csv and recompute the coverage independently
  std::ifstream band(out.band_csv);
  std::string header;
  std::getline(band, header);
  CHECK(header == "y,mean,lower,upper,truth");
  double y, mean, lower, upper, truth;
  char comma;
  long rows = 0, inside = 0;
  while (band >> y >> comma >> mean >> comma >> lower >> comma >> upper >> comma >> truth) {
    CHECK(lower == mean);
    CHECK(upper == mean);
    if (lower <= truth && truth <= upper) ++inside;
    ++rows;
  }
  CHECK(rows == 16);
  CHECK(out.e3 == doctest::Approx(100.0 * inside / rows));
}

TEST_CASE("cmd_bench reports a positive ratio and identical swap sequences across runs") {
  const fs::path dir = fresh_dir("bench");
  ExperimentConfig cfg = tiny_config(dir.string(), 9);
  const std::string data_path = cmd_generate(cfg);
  const BenchOutputs a = cmd_bench(cfg, data_path);
  const std::string swaps_r = slurp((dir / "swaps_resgld.csv").string());
  const std::string swaps_m = slurp((dir / "swaps_mresgld.csv").string());
  const BenchOutputs b = cmd_bench(cfg, data_path);
  CHECK(a.ratio > 0.0);
  CHECK(slurp((dir / "swaps_resgld.csv").string()) == swaps_r);
  CHECK(slurp((dir / "swaps_mresgld.csv").string()) == swaps_m);
}

#ifdef BONET_CLI_PATH
TEST_CASE("the command-line binary wires the subcommands together") {
  const fs::path dir = fresh_dir("binary");
  const std::string cfg_path = (dir / "exp.cfg").string();
  {
    std::ofstream os(cfg_path);
    os << "problem = antiderivative\nsensors = 16\nn_trajectories = 6\n"
          "queries_per_trajectory = 5\nn_test = 4\nbranch_width = 8\ntrunk_width = 8\n"
          "q = 6\nepochs = 20\nburn_in_epochs = 8\nminibatch = 10\ntau1 = 1e-6\ntau2 = 1e-4\n"
          "eta1 = 1e-9\neta2 = 1e-9\nensemble_size = 3\nseed = 4\nout_dir = "
       << (dir / "out").string() << "\n";
  }
  const std::string bin = BONET_CLI_PATH;
  auto run = [&](const std::string& args) {
    return std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
  };
  CHECK(run("generate --config " + cfg_path) == 0);
  CHECK(run("train --config " + cfg_path + " --method resgld") == 0);
  CHECK(run("train --config " + cfg_path + " --method adam") == 0);
  CHECK(run("evaluate --config " + cfg_path + " --trajectory 0") == 0);
  CHECK(fs::exists(dir / "out" / "band.csv"));
  CHECK(fs::exists(dir / "out" / "manifest.txt"));

  // bad inputs exit nonzero
  CHECK(run("train --config " + cfg_path + " --method nope") != 0);
  CHECK(run("train --config /does/not/exist.cfg") != 0);
}
#endif
