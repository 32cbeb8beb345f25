#include "bonet/dataset.hpp"

#include <fstream>
#include <sstream>

namespace bonet {

namespace {

// substream kinds for seed derivation
constexpr std::uint64_t kStreamTrainInput = 2;
constexpr std::uint64_t kStreamTrainQuery = 3;
constexpr std::uint64_t kStreamTrainNoise = 4;
constexpr std::uint64_t kStreamTestInput = 5;

std::uint64_t stream_id(std::uint64_t kind, std::uint64_t index) {
  return (kind << 40) ^ index;
}

}  // namespace

const char* problem_name(ProblemId p) {
  switch (p) {
    case ProblemId::Antiderivative: return "antiderivative";
    case ProblemId::Pendulum: return "pendulum";
    case ProblemId::DiffusionReaction: return "diffusion_reaction";
    case ProblemId::AdvectionDiffusion: return "advection_diffusion";
  }
  return "unknown";
}

ProblemId problem_from_name(const std::string& name) {
  if (name == "antiderivative") return ProblemId::Antiderivative;
  if (name == "pendulum") return ProblemId::Pendulum;
  if (name == "diffusion_reaction") return ProblemId::DiffusionReaction;
  if (name == "advection_diffusion") return ProblemId::AdvectionDiffusion;
  throw ConfigError("unknown problem '" + name + "'");
}

void solve_problem(ProblemId problem, const Eigen::Ref<const Vector>& u_disc,
                   const Eigen::Ref<const Vector>& sensors, const SolverParams& params,
                   int query_dim, Matrix& mesh, Vector& values) {
  const bool is_ode = problem == ProblemId::Antiderivative || problem == ProblemId::Pendulum;
  if (query_dim != 1 && query_dim != 2) throw ConfigError("query_dim must be 1 or 2");
  if (query_dim == 2 && is_ode)
    throw ConfigError("query_dim 2 requires a space-time problem");

  if (is_ode) {
    Vector s = problem == ProblemId::Antiderivative
                   ? solve_antiderivative(u_disc, sensors)
                   : solve_pendulum(u_disc, sensors, params.pendulum_k, params.rk4_substeps);
    mesh = sensors;
    values = std::move(s);
    return;
  }

  SolutionField field =
      problem == ProblemId::DiffusionReaction
          ? solve_diffusion_reaction(u_disc, sensors, params.diffusion_d, params.reaction_k,
                                     params.nx, params.nt, params.t_final)
          : solve_advection_diffusion(u_disc, sensors, params.advection_d, params.nx, params.nt,
                                      params.t_final);

  if (query_dim == 1) {
    // space at final time
    mesh = field.x;
    values = field.final_slice();
    return;
  }
  const Index nx = field.x.size();
  const Index nt1 = field.t.size();
  mesh.resize(nx * nt1, 2);
  values.resize(nx * nt1);
  Index row = 0;
  for (Index j = 0; j < nt1; ++j)
    for (Index i = 0; i < nx; ++i, ++row) {
      mesh(row, 0) = field.x[i];
      mesh(row, 1) = field.t[j];
      values[row] = field.values(i, j);
    }
}

OperatorDataset build_dataset(const DatasetOptions& opt) {
  if (opt.n_trajectories < 1 || opt.queries_per_trajectory < 1)
    throw ConfigError("build_dataset: need at least one trajectory and one query");
  if (opt.noise_sigma < 0.0) throw ConfigError("build_dataset: noise sigma must be >= 0");
  if (opt.n_test < 1) throw ConfigError("build_dataset: need at least one test trajectory");

  OperatorDataset data;
  data.problem = opt.problem;
  data.query_dim = opt.query_dim;
  data.noise_sigma = opt.noise_sigma;
  data.sensors = uniform_grid(opt.sensors, 0.0, 1.0);

  GrfSpec grf;
  grf.length_scale = opt.length_scale;
  grf.jitter = opt.jitter;
  grf.grid = data.sensors;
  const GrfSampler sampler(grf);

  const long n_rows = opt.n_trajectories * opt.queries_per_trajectory;
  data.train.u_disc.resize(n_rows, opt.sensors);
  data.train.y.resize(n_rows, opt.query_dim);
  data.train.targets.resize(n_rows);

  Matrix mesh;
  Vector values;
  long row = 0;
  for (long i = 0; i < opt.n_trajectories; ++i) {
    NormalStream input_rng(derive_seed(opt.seed, stream_id(kStreamTrainInput, i)));
    UniformStream query_rng(derive_seed(opt.seed, stream_id(kStreamTrainQuery, i)));
    NormalStream noise_rng(derive_seed(opt.seed, stream_id(kStreamTrainNoise, i)));

    const Vector u = sampler.sample(input_rng);
    solve_problem(opt.problem, u, data.sensors, opt.solver, opt.query_dim, mesh, values);

    for (long qi = 0; qi < opt.queries_per_trajectory; ++qi, ++row) {
      const Index pick = static_cast<Index>(query_rng.next_below(mesh.rows()));
      data.train.u_disc.row(row) = u.transpose();
      data.train.y.row(row) = mesh.row(pick);
      data.train.targets[row] = values[pick] + opt.noise_sigma * noise_rng.next();
    }
  }

  // noise-free held-out trajectories from an independent seed stream; the
  // test mesh is always the plotted trajectory (space at final time for the
  // PDE problems), lifted to (x, t_final) pairs when training on space-time.
  bool first = true;
  for (long j = 0; j < opt.n_test; ++j) {
    NormalStream input_rng(derive_seed(opt.seed, stream_id(kStreamTestInput, j)));
    const Vector u = sampler.sample(input_rng);
    solve_problem(opt.problem, u, data.sensors, opt.solver, 1, mesh, values);
    if (opt.query_dim == 2) {
      Matrix lifted(mesh.rows(), 2);
      lifted.col(0) = mesh.col(0);
      lifted.col(1).setConstant(opt.solver.t_final);
      mesh = lifted;
    }
    if (first) {
      data.test_u.resize(opt.n_test, opt.sensors);
      data.test_mesh = mesh;
      data.test_truth.resize(opt.n_test, values.size());
      first = false;
    }
    data.test_u.row(j) = u.transpose();
    data.test_truth.row(j) = values.transpose();
  }
  return data;
}

void save_dataset(std::ostream& os, const OperatorDataset& data) {
  os.precision(17);
  const Index m = data.sensors.size();
  const Index n = data.train.size();
  os << "dataset " << problem_name(data.problem) << ' ' << m << ' ' << data.query_dim << ' ' << n
     << ' ' << data.noise_sigma << '\n';
  for (Index i = 0; i < m; ++i) os << data.sensors[i] << '\n';
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < m; ++c) os << data.train.u_disc(r, c) << ' ';
    for (Index c = 0; c < data.query_dim; ++c) os << data.train.y(r, c) << ' ';
    os << data.train.targets[r] << '\n';
  }
  os << "test " << data.test_u.rows() << '\n';
  for (Index t = 0; t < data.test_u.rows(); ++t) {
    for (Index c = 0; c < m; ++c) os << data.test_u(t, c) << (c + 1 < m ? ' ' : '\n');
    os << "mesh " << data.test_mesh.rows() << '\n';
    for (Index k = 0; k < data.test_mesh.rows(); ++k) {
      for (Index c = 0; c < data.test_mesh.cols(); ++c) os << data.test_mesh(k, c) << ' ';
      os << data.test_truth(t, k) << '\n';
    }
  }
}

OperatorDataset load_dataset(std::istream& is) {
  std::string tag, problem;
  Index m = 0, n = 0;
  int d = 0;
  double sigma = 0.0;
  if (!(is >> tag >> problem >> m >> d >> n >> sigma) || tag != "dataset")
    throw IoError("dataset: bad header");

  OperatorDataset data;
  data.problem = problem_from_name(problem);
  data.query_dim = d;
  data.noise_sigma = sigma;
  data.sensors.resize(m);
  for (Index i = 0; i < m; ++i)
    if (!(is >> data.sensors[i])) throw IoError("dataset: truncated sensor block");

  data.train.u_disc.resize(n, m);
  data.train.y.resize(n, d);
  data.train.targets.resize(n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < m; ++c)
      if (!(is >> data.train.u_disc(r, c))) throw IoError("dataset: truncated triplet block");
    for (Index c = 0; c < d; ++c)
      if (!(is >> data.train.y(r, c))) throw IoError("dataset: truncated triplet block");
    if (!(is >> data.train.targets[r])) throw IoError("dataset: truncated triplet block");
  }

  Index n_test = 0;
  if (!(is >> tag >> n_test) || tag != "test") throw IoError("dataset: bad test header");
  data.test_u.resize(n_test, m);
  for (Index t = 0; t < n_test; ++t) {
    for (Index c = 0; c < m; ++c)
      if (!(is >> data.test_u(t, c))) throw IoError("dataset: truncated test input");
    Index k = 0;
    if (!(is >> tag >> k) || tag != "mesh") throw IoError("dataset: bad mesh header");
    Matrix mesh(k, d);
    Vector truth(k);
    for (Index r = 0; r < k; ++r) {
      for (Index c = 0; c < d; ++c)
        if (!(is >> mesh(r, c))) throw IoError("dataset: truncated mesh block");
      if (!(is >> truth[r])) throw IoError("dataset: truncated mesh block");
    }
    if (t == 0) {
      data.test_mesh = mesh;
      data.test_truth.resize(n_test, k);
    } else if (mesh.rows() != data.test_mesh.rows() || mesh != data.test_mesh) {
      throw IoError("dataset: test trajectories must share one mesh");
    }
    data.test_truth.row(t) = truth.transpose();
  }
  return data;
}

void save_dataset_file(const std::string& path, const OperatorDataset& data) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  save_dataset(os, data);
  if (!os) throw IoError("failed while writing '" + path + "'");
}

OperatorDataset load_dataset_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  return load_dataset(is);
}

}  // namespace bonet
