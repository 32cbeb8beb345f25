#pragma once

#include <iosfwd>
#include <string>

#include "bonet/deeponet.hpp"
#include "bonet/grf.hpp"
#include "bonet/solvers.hpp"
#include "bonet/types.hpp"

namespace bonet {

enum class ProblemId { Antiderivative, Pendulum, DiffusionReaction, AdvectionDiffusion };

const char* problem_name(ProblemId p);
ProblemId problem_from_name(const std::string& name);

// Reference-solver settings shared by dataset generation.
struct SolverParams {
  int nx = 100;
  int nt = 100;
  double diffusion_d = 0.01;      // diffusion-reaction diffusivity
  double reaction_k = -0.01;
  double pendulum_k = 1.0;
  double advection_d = 0.1;       // advection-diffusion diffusivity
  int rk4_substeps = 10;
  double t_final = 1.0;
};

// Options for dataset assembly; the master seed drives independent substreams
// for input draws, query selection, noise, and the held-out test inputs.
struct DatasetOptions {
  ProblemId problem = ProblemId::Antiderivative;
  int sensors = 100;
  int query_dim = 1;              // 2 samples space-time queries (PDE problems only)
  long n_trajectories = 1000;
  long queries_per_trajectory = 100;
  long n_test = 100;
  double noise_sigma = 0.01;
  double length_scale = 0.2;
  double jitter = 1e-10;
  SolverParams solver;
  std::uint64_t seed = 0;
};

// Training triplets plus held-out noise-free test trajectories. All test
// trajectories share one evaluation mesh (the solver grid of the plotted
// trajectory).
struct OperatorDataset {
  ProblemId problem = ProblemId::Antiderivative;
  int query_dim = 1;
  double noise_sigma = 0.0;
  Vector sensors;       // m locations
  TrainingBatch train;  // N rows
  Matrix test_u;        // n_test x m
  Matrix test_mesh;     // K x d
  Matrix test_truth;    // n_test x K
};

// Solves the reference problem for one input function and returns the query
// pool: rows of `mesh` are the candidate y points, `values` the matching
// operator targets. For query_dim == 1 this is the plotted trajectory (the
// ODE solution on the sensor grid, or the PDE final-time slice); for
// query_dim == 2 it is the full space-time grid.
void solve_problem(ProblemId problem, const Eigen::Ref<const Vector>& u_disc,
                   const Eigen::Ref<const Vector>& sensors, const SolverParams& params,
                   int query_dim, Matrix& mesh, Vector& values);

OperatorDataset build_dataset(const DatasetOptions& options);

// Plain-text dataset serialization (17 significant digits).
void save_dataset(std::ostream& os, const OperatorDataset& data);
OperatorDataset load_dataset(std::istream& is);

void save_dataset_file(const std::string& path, const OperatorDataset& data);
OperatorDataset load_dataset_file(const std::string& path);

}  // namespace bonet
