#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bonet/dataset.hpp"

using namespace bonet;

namespace {

DatasetOptions small_options() {
  DatasetOptions opt;
  opt.problem = ProblemId::Antiderivative;
  opt.sensors = 20;
  opt.n_trajectories = 5;
  opt.queries_per_trajectory = 4;
  opt.n_test = 3;
  opt.noise_sigma = 0.01;
  opt.seed = 5;
  return opt;
}

}  // namespace

TEST_CASE("sigma = 0 targets equal the solver output exactly") {
  DatasetOptions opt = small_options();
  opt.noise_sigma = 0.0;
  const OperatorDataset data = build_dataset(opt);
  for (Index r = 0; r < data.train.size(); ++r) {
    const Vector u = data.train.u_disc.row(r).transpose();
    const Vector s = solve_antiderivative(u, data.sensors);
    const double y = data.train.y(r, 0);
    // the query point lies on the solver grid
    Index k = 0;
    while (k < data.sensors.size() && data.sensors[k] != y) ++k;
    REQUIRE(k < data.sensors.size());
    CHECK(data.train.targets[r] == s[k]);
  }
}

TEST_CASE("noise draws ride on top of the sigma = 0 geometry") {
  DatasetOptions noisy = small_options();
  DatasetOptions clean = small_options();
  clean.noise_sigma = 0.0;
  const OperatorDataset a = build_dataset(noisy);
  const OperatorDataset b = build_dataset(clean);
  CHECK(a.train.u_disc == b.train.u_disc);
  CHECK(a.train.y == b.train.y);
  CHECK((a.train.targets - b.train.targets).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("empirical noise std matches sigma within 2 percent") {
  DatasetOptions opt = small_options();
  opt.n_trajectories = 100;
  opt.queries_per_trajectory = 1000;  // 1e5 noise draws
  opt.noise_sigma = 0.01;
  DatasetOptions clean = opt;
  clean.noise_sigma = 0.0;
  const OperatorDataset noisy = build_dataset(opt);
  const OperatorDataset base = build_dataset(clean);
  const Vector eps = noisy.train.targets - base.train.targets;
  const double std_hat = std::sqrt(eps.squaredNorm() / static_cast<double>(eps.size()));
  CHECK(std_hat == doctest::Approx(0.01).epsilon(0.02));
}

TEST_CASE("identical seeds give identical datasets, test split is independent of training count") {
  const OperatorDataset a = build_dataset(small_options());
  const OperatorDataset b = build_dataset(small_options());
  CHECK(a.train.u_disc == b.train.u_disc);
  CHECK(a.train.y == b.train.y);
  CHECK(a.train.targets == b.train.targets);
  CHECK(a.test_u == b.test_u);
  CHECK(a.test_truth == b.test_truth);

  DatasetOptions more = small_options();
  more.n_trajectories = 7;
  const OperatorDataset c = build_dataset(more);
  CHECK(c.test_u == a.test_u);  // test stream does not depend on the training stream
}

TEST_CASE("save/load round trip is exact") {
  const OperatorDataset data = build_dataset(small_options());
  std::stringstream ss;
  save_dataset(ss, data);
  const OperatorDataset loaded = load_dataset(ss);
  CHECK(loaded.problem == data.problem);
  CHECK(loaded.noise_sigma == data.noise_sigma);
  CHECK(loaded.sensors == data.sensors);
  CHECK(loaded.train.u_disc == data.train.u_disc);
  CHECK(loaded.train.y == data.train.y);
  CHECK(loaded.train.targets == data.train.targets);
  CHECK(loaded.test_u == data.test_u);
  CHECK(loaded.test_mesh == data.test_mesh);
  CHECK(loaded.test_truth == data.test_truth);
}

TEST_CASE("pde problems expose the final-time slice as the default query pool") {
  DatasetOptions opt = small_options();
  opt.problem = ProblemId::AdvectionDiffusion;
  opt.solver.nx = 64;
  opt.solver.nt = 64;
  const OperatorDataset data = build_dataset(opt);
  CHECK(data.test_mesh.rows() == 64);
  CHECK(data.test_mesh.cols() == 1);
  // advection-diffusion conserves mass; a crude sanity check on the truth rows
  CHECK(data.test_truth.allFinite());
}

TEST_CASE("space-time queries carry two coordinates") {
  DatasetOptions opt = small_options();
  opt.problem = ProblemId::DiffusionReaction;
  opt.query_dim = 2;
  opt.solver.nx = 50;
  opt.solver.nt = 50;
  const OperatorDataset data = build_dataset(opt);
  CHECK(data.train.y.cols() == 2);
  CHECK(data.query_dim == 2);
  // test mesh is the final-time slice lifted to (x, t_final)
  CHECK(data.test_mesh.cols() == 2);
  CHECK((data.test_mesh.col(1).array() == opt.solver.t_final).all());
  // ODE problems reject space-time queries
  opt.problem = ProblemId::Antiderivative;
  CHECK_THROWS_AS(build_dataset(opt), ConfigError);
}
