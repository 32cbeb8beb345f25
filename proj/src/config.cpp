#include "bonet/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace bonet {

namespace {

constexpr std::uint64_t kStreamModelInit = 1;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* sigma_mode_name(SigmaCorrection mode) {
  switch (mode) {
    case SigmaCorrection::Ema: return "ema";
    case SigmaCorrection::Fixed: return "fixed";
    case SigmaCorrection::Off: return "off";
  }
  return "ema";
}

SigmaCorrection sigma_mode_from_name(const std::string& name) {
  if (name == "ema") return SigmaCorrection::Ema;
  if (name == "fixed") return SigmaCorrection::Fixed;
  if (name == "off") return SigmaCorrection::Off;
  throw ConfigError("unknown sigma_correction '" + name + "' (expected ema, fixed or off)");
}

const char* prior_name(PriorKind prior) {
  return prior == PriorKind::None ? "none" : "gaussian";
}

PriorKind prior_from_name(const std::string& name) {
  if (name == "none") return PriorKind::None;
  if (name == "gaussian") return PriorKind::Gaussian;
  throw ConfigError("unknown prior '" + name + "' (expected none or gaussian)");
}

// field registry: uniform get/set through strings keeps parsing, overrides
// and the manifest in one place
struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream ss(text);
  T value{};
  if (!(ss >> value) || !(ss >> std::ws).eof())
    throw ConfigError("config: bad value '" + text + "' for key '" + key + "'");
  return value;
}

const std::map<std::string, Field>& field_registry() {
  static const std::map<std::string, Field> fields = [] {
    std::map<std::string, Field> f;
    auto num = [&f](const std::string& key, auto member) {
      using T = std::decay_t<decltype(std::declval<ExperimentConfig>().*member)>;
      f[key] = Field{[key, member](ExperimentConfig& c, const std::string& v) {
                       c.*member = parse_number<T>(key, v);
                     },
                     [member](const ExperimentConfig& c) {
                       if constexpr (std::is_floating_point_v<T>)
                         return format_double(c.*member);
                       else
                         return std::to_string(c.*member);
                     }};
    };
    auto solver_num = [&f](const std::string& key, auto member) {
      using T = std::decay_t<decltype(std::declval<SolverParams>().*member)>;
      f[key] = Field{[key, member](ExperimentConfig& c, const std::string& v) {
                       c.solver.*member = parse_number<T>(key, v);
                     },
                     [member](const ExperimentConfig& c) {
                       if constexpr (std::is_floating_point_v<T>)
                         return format_double(c.solver.*member);
                       else
                         return std::to_string(c.solver.*member);
                     }};
    };

    f["problem"] = Field{[](ExperimentConfig& c, const std::string& v) {
                           c.problem = problem_from_name(v);
                         },
                         [](const ExperimentConfig& c) {
                           return std::string(problem_name(c.problem));
                         }};
    f["activation"] = Field{[](ExperimentConfig& c, const std::string& v) {
                              c.activation = activation_from_name(v);
                            },
                            [](const ExperimentConfig& c) {
                              return std::string(activation_name(c.activation));
                            }};
    f["sigma_correction"] = Field{[](ExperimentConfig& c, const std::string& v) {
                                    c.sigma_mode = sigma_mode_from_name(v);
                                  },
                                  [](const ExperimentConfig& c) {
                                    return std::string(sigma_mode_name(c.sigma_mode));
                                  }};
    f["prior"] = Field{[](ExperimentConfig& c, const std::string& v) {
                         c.prior = prior_from_name(v);
                       },
                       [](const ExperimentConfig& c) { return std::string(prior_name(c.prior)); }};
    f["out_dir"] = Field{[](ExperimentConfig& c, const std::string& v) { c.out_dir = v; },
                         [](const ExperimentConfig& c) { return c.out_dir; }};

    num("noise_sigma", &ExperimentConfig::noise_sigma);
    num("sensors", &ExperimentConfig::sensors);
    num("query_dim", &ExperimentConfig::query_dim);
    num("n_trajectories", &ExperimentConfig::n_trajectories);
    num("queries_per_trajectory", &ExperimentConfig::queries_per_trajectory);
    num("n_test", &ExperimentConfig::n_test);
    num("length_scale", &ExperimentConfig::length_scale);
    num("jitter", &ExperimentConfig::jitter);
    num("branch_width", &ExperimentConfig::branch_width);
    num("branch_depth", &ExperimentConfig::branch_depth);
    num("trunk_width", &ExperimentConfig::trunk_width);
    num("trunk_depth", &ExperimentConfig::trunk_depth);
    num("q", &ExperimentConfig::q);
    num("epochs", &ExperimentConfig::epochs);
    num("minibatch", &ExperimentConfig::minibatch);
    num("seed", &ExperimentConfig::seed);
    num("burn_in_epochs", &ExperimentConfig::burn_in_epochs);
    num("tau1", &ExperimentConfig::tau1);
    num("tau2", &ExperimentConfig::tau2);
    num("eta1", &ExperimentConfig::eta1);
    num("eta2", &ExperimentConfig::eta2);
    num("a1", &ExperimentConfig::a1);
    num("a2", &ExperimentConfig::a2);
    num("control_c", &ExperimentConfig::control_c);
    num("ensemble_size", &ExperimentConfig::ensemble_size);
    num("thinning", &ExperimentConfig::thinning);
    num("swap_interval", &ExperimentConfig::swap_interval);
    num("sigma1_fixed", &ExperimentConfig::sigma1_fixed);
    num("sigma2_fixed", &ExperimentConfig::sigma2_fixed);
    num("ema_decay", &ExperimentConfig::ema_decay);
    num("prior_sigma", &ExperimentConfig::prior_sigma);
    num("adam_lr", &ExperimentConfig::adam_lr);
    num("adam_beta1", &ExperimentConfig::adam_beta1);
    num("adam_beta2", &ExperimentConfig::adam_beta2);
    num("adam_eps", &ExperimentConfig::adam_eps);
    num("dropout_rate", &ExperimentConfig::dropout_rate);
    num("bench_iterations", &ExperimentConfig::bench_iterations);
    num("bench_c", &ExperimentConfig::bench_c);

    solver_num("nx", &SolverParams::nx);
    solver_num("nt", &SolverParams::nt);
    solver_num("diffusion_d", &SolverParams::diffusion_d);
    solver_num("reaction_k", &SolverParams::reaction_k);
    solver_num("pendulum_k", &SolverParams::pendulum_k);
    solver_num("advection_d", &SolverParams::advection_d);
    solver_num("rk4_substeps", &SolverParams::rk4_substeps);
    solver_num("t_final", &SolverParams::t_final);
    return f;
  }();
  return fields;
}

}  // namespace

DatasetOptions ExperimentConfig::dataset_options() const {
  DatasetOptions opt;
  opt.problem = problem;
  opt.sensors = sensors;
  opt.query_dim = query_dim;
  opt.n_trajectories = n_trajectories;
  opt.queries_per_trajectory = queries_per_trajectory;
  opt.n_test = n_test;
  opt.noise_sigma = noise_sigma;
  opt.length_scale = length_scale;
  opt.jitter = jitter;
  opt.solver = solver;
  opt.seed = seed;
  return opt;
}

SamplerConfig ExperimentConfig::sampler_config() const {
  SamplerConfig cfg;
  cfg.epochs = epochs;
  cfg.burn_in_epochs = burn_in_epochs;
  cfg.minibatch = minibatch;
  cfg.tau1 = tau1;
  cfg.tau2 = tau2;
  cfg.eta1 = eta1;
  cfg.eta2 = eta2;
  cfg.a1 = a1;
  cfg.a2 = a2;
  cfg.control_c = control_c;
  cfg.ensemble_size = ensemble_size;
  cfg.thinning = thinning;
  cfg.swap_interval = swap_interval;
  cfg.sigma_mode = sigma_mode;
  cfg.sigma1_fixed = sigma1_fixed;
  cfg.sigma2_fixed = sigma2_fixed;
  cfg.ema_decay = ema_decay;
  cfg.seed = seed;
  return cfg;
}

AdamConfig ExperimentConfig::adam_config() const {
  AdamConfig cfg;
  cfg.epochs = epochs;
  cfg.minibatch = minibatch;
  cfg.learning_rate = adam_lr;
  cfg.beta1 = adam_beta1;
  cfg.beta2 = adam_beta2;
  cfg.epsilon = adam_eps;
  cfg.dropout_rate = dropout_rate;
  cfg.ensemble_size = ensemble_size;
  cfg.seed = seed;
  return cfg;
}

EnergySpec ExperimentConfig::energy_spec(Index dataset_size) const {
  EnergySpec spec;
  spec.noise_sigma = noise_sigma;
  spec.prior = prior;
  spec.prior_sigma = prior_sigma;
  spec.dataset_size = dataset_size;
  return spec;
}

DeepOnetModel ExperimentConfig::make_initial_model() const {
  UniformStream rng(derive_seed(seed, kStreamModelInit << 40));
  const std::vector<int> branch_hidden(static_cast<std::size_t>(branch_depth), branch_width);
  const std::vector<int> trunk_hidden(static_cast<std::size_t>(trunk_depth), trunk_width);
  return make_deeponet(sensors, query_dim, q, branch_hidden, trunk_hidden, activation, rng);
}

KeyValues parse_key_values(std::istream& is) {
  KeyValues entries;
  std::string line;
  long line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
    entries.emplace_back(key, value);
  }
  return entries;
}

KeyValues parse_key_value_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file '" + path + "'");
  return parse_key_values(is);
}

void apply_key_values(ExperimentConfig& cfg, const KeyValues& entries) {
  const auto& fields = field_registry();
  for (const auto& [key, value] : entries) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second.set(cfg, value);
  }
}

ExperimentConfig load_config(const std::string& path, const KeyValues& overrides) {
  ExperimentConfig cfg;
  apply_key_values(cfg, parse_key_value_file(path));
  apply_key_values(cfg, overrides);
  return cfg;
}

void write_manifest(std::ostream& os, const ExperimentConfig& cfg) {
  for (const auto& [key, field] : field_registry()) os << key << " = " << field.get(cfg) << '\n';
}

}  // namespace bonet
