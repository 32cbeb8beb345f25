#include "bonet/experiment.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bonet/metrics.hpp"

namespace bonet {

namespace fs = std::filesystem;

const char* method_name(TrainMethod m) {
  switch (m) {
    case TrainMethod::Adam: return "adam";
    case TrainMethod::Resgld: return "resgld";
    case TrainMethod::MResgld: return "m-resgld";
  }
  return "unknown";
}

TrainMethod method_from_name(const std::string& name) {
  if (name == "adam") return TrainMethod::Adam;
  if (name == "resgld") return TrainMethod::Resgld;
  if (name == "m-resgld" || name == "mresgld") return TrainMethod::MResgld;
  throw ConfigError("unknown method '" + name + "' (expected adam, resgld or m-resgld)");
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot open '" + tmp + "' for writing");
    os << content;
    if (!os) throw IoError("failed while writing '" + tmp + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_out_dir(const ExperimentConfig& cfg) {
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

void write_manifest_file(const ExperimentConfig& cfg, const std::string& command) {
  std::ostringstream os;
  os << "command = " << command << '\n';
  write_manifest(os, cfg);
  atomic_write_file(out_path(cfg, "manifest.txt"), os.str());
}

std::string errors_csv_text(const Diagnostics& diag) {
  std::ostringstream os;
  os << "epoch,e1,e2\n";
  for (std::size_t i = 0; i < diag.e1.size(); ++i)
    os << i << ',' << fmt(diag.e1[i]) << ',' << fmt(diag.e2[i]) << '\n';
  return os.str();
}

std::string timing_csv_text(const Diagnostics& diag) {
  std::ostringstream os;
  os << "iteration,seconds\n";
  for (std::size_t i = 0; i < diag.iter_seconds.size(); ++i)
    os << i << ',' << fmt(diag.iter_seconds[i]) << '\n';
  return os.str();
}

std::string swaps_csv_text(const Diagnostics& diag) {
  std::ostringstream os;
  os << "iteration,r_hat,swapped\n";
  for (const SwapRecord& s : diag.swaps)
    os << s.iteration << ',' << fmt(s.r_hat) << ',' << (s.swapped ? 1 : 0) << '\n';
  return os.str();
}

std::string model_text(const DeepOnetModel& model) {
  std::ostringstream os;
  save_deeponet(os, model);
  return os.str();
}

std::string ensemble_text(const DeepOnetModel& model_template, const PosteriorEnsemble& ensemble) {
  std::ostringstream os;
  save_ensemble(os, model_template, ensemble);
  return os.str();
}

}  // namespace

std::string cmd_generate(const ExperimentConfig& cfg) {
  ensure_out_dir(cfg);
  const OperatorDataset data = build_dataset(cfg.dataset_options());
  std::ostringstream os;
  save_dataset(os, data);
  const std::string path = out_path(cfg, "dataset.txt");
  atomic_write_file(path, os.str());
  write_manifest_file(cfg, "generate");
  std::cout << "generated " << problem_name(data.problem) << ": N=" << data.train.size()
            << " sigma=" << data.noise_sigma << " seed=" << cfg.seed << " -> " << path << '\n';
  return path;
}

TrainOutputs cmd_train(const ExperimentConfig& cfg, TrainMethod method,
                       const std::string& dataset_path) {
  ensure_out_dir(cfg);
  const OperatorDataset data = load_dataset_file(dataset_path);
  const DeepOnetModel init = cfg.make_initial_model();

  TrainOutputs out;
  out.errors_csv = out_path(cfg, "errors.csv");
  out.timing_csv = out_path(cfg, "timing.csv");
  out.model_file = out_path(cfg, "model.txt");
  out.ensemble_file = out_path(cfg, "ensemble.txt");

  if (cfg.epochs == 0) {
    // nothing to train: initial checkpoint, header-only diagnostics
    atomic_write_file(out.model_file, model_text(init));
    atomic_write_file(out.errors_csv, "epoch,e1,e2\n");
    atomic_write_file(out.timing_csv, "iteration,seconds\n");
    if (method != TrainMethod::Adam) {
      out.swaps_csv = out_path(cfg, "swaps.csv");
      atomic_write_file(out.swaps_csv, "iteration,r_hat,swapped\n");
    }
    write_manifest_file(cfg, std::string("train ") + method_name(method));
    return out;
  }

  Diagnostics diag;
  if (method == TrainMethod::Adam) {
    auto [model, ensemble, d] = adam_dropout_train(init, data, cfg.adam_config());
    diag = std::move(d);
    atomic_write_file(out.model_file, model_text(model));
    atomic_write_file(out.ensemble_file, ensemble_text(init, ensemble));
  } else {
    const EnergySpec spec = cfg.energy_spec(data.train.size());
    auto [ensemble, d] = method == TrainMethod::Resgld
                             ? resgld_train(init, data, cfg.sampler_config(), spec)
                             : m_resgld_train(init, data, cfg.sampler_config(), spec);
    diag = std::move(d);
    DeepOnetModel last = init;
    deeponet_unflatten(last, ensemble.samples.back());
    atomic_write_file(out.model_file, model_text(last));
    atomic_write_file(out.ensemble_file, ensemble_text(init, ensemble));
    out.swaps_csv = out_path(cfg, "swaps.csv");
    atomic_write_file(out.swaps_csv, swaps_csv_text(diag));
  }

  atomic_write_file(out.errors_csv, errors_csv_text(diag));
  atomic_write_file(out.timing_csv, timing_csv_text(diag));
  write_manifest_file(cfg, std::string("train ") + method_name(method));

  if (!diag.e1.empty()) {
    out.final_e1 = diag.e1.back();
    out.final_e2 = diag.e2.back();
    std::cout << method_name(method) << ": final e1=" << out.final_e1
              << "% e2=" << out.final_e2 << "% swaps=" << diag.swap_count << '\n';
  }
  return out;
}

EvaluateOutputs cmd_evaluate(const ExperimentConfig& cfg, const std::string& dataset_path,
                             const std::string& ensemble_path, long trajectory_index) {
  ensure_out_dir(cfg);
  const OperatorDataset data = load_dataset_file(dataset_path);
  std::ifstream is(ensemble_path);
  if (!is) throw IoError("cannot open ensemble file '" + ensemble_path + "'");
  auto [model_template, ensemble] = load_ensemble(is);

  if (trajectory_index < 0 || trajectory_index >= data.test_u.rows())
    throw ConfigError("evaluate: trajectory index out of range");

  const Vector u = data.test_u.row(trajectory_index).transpose();
  const Vector truth = data.test_truth.row(trajectory_index).transpose();
  const PredictionBand band =
      ensemble_band(ensemble.samples, u, data.test_mesh, model_template, truth);

  EvaluateOutputs out;
  const auto [e1, e2] = relative_errors(band.mean, truth);
  out.e1 = e1;
  out.e2 = e2;
  out.e3 = coverage_ratio(band);

  std::ostringstream os;
  for (Index c = 0; c < band.mesh.cols(); ++c) os << 'y' << (band.mesh.cols() > 1 ? std::to_string(c + 1) : "") << ',';
  os << "mean,lower,upper,truth\n";
  for (Index k = 0; k < band.mesh.rows(); ++k) {
    for (Index c = 0; c < band.mesh.cols(); ++c) os << fmt(band.mesh(k, c)) << ',';
    os << fmt(band.mean[k]) << ',' << fmt(band.lower[k]) << ',' << fmt(band.upper[k]) << ','
       << fmt(band.truth[k]) << '\n';
  }
  out.band_csv = out_path(cfg, "band.csv");
  atomic_write_file(out.band_csv, os.str());
  write_manifest_file(cfg, "evaluate");

  std::cout << "trajectory " << trajectory_index << ": e1=" << out.e1 << "% e2=" << out.e2
            << "% e3=" << out.e3 << "%\n";
  return out;
}

BenchOutputs cmd_bench(const ExperimentConfig& cfg, const std::string& dataset_path) {
  ensure_out_dir(cfg);
  const OperatorDataset data = load_dataset_file(dataset_path);
  const DeepOnetModel init = cfg.make_initial_model();
  const EnergySpec spec = cfg.energy_spec(data.train.size());

  SamplerConfig run = cfg.sampler_config();
  const long ipe = (data.train.size() + run.minibatch - 1) / run.minibatch;
  run.epochs = std::max<long>(1, cfg.bench_iterations / ipe);
  run.burn_in_epochs = 0;  // measure the accelerated regime from the start
  run.ensemble_size = 1;
  run.thinning = 1;
  run.control_c = cfg.bench_c;

  SamplerConfig warmup = run;
  warmup.epochs = std::max<long>(1, run.epochs / 10);

  BenchOutputs out;
  resgld_train(init, data, warmup, spec);
  const auto [ens_r, diag_r] = resgld_train(init, data, run, spec);
  m_resgld_train(init, data, warmup, spec);
  const auto [ens_m, diag_m] = m_resgld_train(init, data, run, spec);

  const auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  out.mean_seconds_resgld = mean_of(diag_r.iter_seconds);
  out.mean_seconds_mresgld = mean_of(diag_m.iter_seconds);
  out.ratio = out.mean_seconds_mresgld / out.mean_seconds_resgld;

  out.timing_resgld_csv = out_path(cfg, "timing_resgld.csv");
  out.timing_mresgld_csv = out_path(cfg, "timing_mresgld.csv");
  atomic_write_file(out.timing_resgld_csv, timing_csv_text(diag_r));
  atomic_write_file(out.timing_mresgld_csv, timing_csv_text(diag_m));
  atomic_write_file(out_path(cfg, "swaps_resgld.csv"), swaps_csv_text(diag_r));
  atomic_write_file(out_path(cfg, "swaps_mresgld.csv"), swaps_csv_text(diag_m));
  write_manifest_file(cfg, "bench");

  std::cout << "bench over " << cfg.bench_iterations
            << " iterations: resgld=" << out.mean_seconds_resgld * 1e3
            << " ms/iter, m-resgld=" << out.mean_seconds_mresgld * 1e3
            << " ms/iter, ratio=" << out.ratio << '\n';
  return out;
}

}  // namespace bonet
