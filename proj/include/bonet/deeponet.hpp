#pragma once

#include <iosfwd>

#include "bonet/mlp.hpp"
#include "bonet/types.hpp"

namespace bonet {

// Operator network: a branch net encodes the discretized input function at m
// sensors, a trunk net encodes the query coordinate, and the output is the
// inner product of the two q-dimensional feature vectors.
struct DeepOnetModel {
  Mlp branch;  // input width m, output width q
  Mlp trunk;   // input width d, output width q
  int m = 0;   // sensor count
  int d = 1;   // query dimension
  int q = 0;   // feature width
};

// Validates the branch/trunk widths against (m, d, q).
void validate_model(const DeepOnetModel& model);

DeepOnetModel make_deeponet(int m, int d, int q, const std::vector<int>& branch_hidden,
                            const std::vector<int>& trunk_hidden, Activation act,
                            UniformStream& rng);

// One minibatch (or a full dataset) of training triplets.
struct TrainingBatch {
  Matrix u_disc;   // n x m
  Matrix y;        // n x d
  Vector targets;  // n

  Index size() const { return targets.size(); }
};

Index deeponet_param_count(const DeepOnetModel& model);
Index branch_param_count(const DeepOnetModel& model);

// Branch parameters first, then trunk, each in mlp layout.
ParamVector deeponet_flatten(const DeepOnetModel& model);
void deeponet_unflatten(DeepOnetModel& model, const Eigen::Ref<const ParamVector>& theta);

double deeponet_forward(const DeepOnetModel& model, const Eigen::Ref<const Vector>& u_disc,
                        const Eigen::Ref<const Vector>& y);

// Predictions for every row of a batch.
Vector deeponet_outputs(const DeepOnetModel& model, const TrainingBatch& batch);

// Mean square loss over the batch.
double deeponet_loss(const DeepOnetModel& model, const TrainingBatch& batch);

// Which block of parameters a gradient or update touches.
enum class ParamBlock { Full, BranchOnly, TrunkOnly };

// Gradient of scale * sum_i residual_i^2 with respect to all parameters, in
// deeponet_flatten layout. Restricting to one block leaves the other block's
// entries zero and skips its backward pass.
ParamVector deeponet_grad(const DeepOnetModel& model, const TrainingBatch& batch, double scale,
                          ParamBlock block = ParamBlock::Full);

// Same, and also reports sum_i residual_i^2 from the shared forward pass.
ParamVector deeponet_sumsq_and_grad(const DeepOnetModel& model, const TrainingBatch& batch,
                                    double scale, ParamBlock block, double& sum_sq);

// Sum of squared residuals only (forward pass, no gradient).
double deeponet_sumsq(const DeepOnetModel& model, const TrainingBatch& batch);

// Trajectory prediction over a mesh (rows of `mesh` are query points). The
// branch feature vector is computed once and reused; the result is point-for-
// point identical to calling deeponet_forward per mesh row.
Vector predict_trajectory(const DeepOnetModel& model, const Eigen::Ref<const Vector>& u_disc,
                          const Eigen::Ref<const Matrix>& mesh);

// Batched trajectory predictions for several input functions sharing one
// mesh: row t holds the predictions for input row t.
Matrix predict_trajectories(const DeepOnetModel& model, const Eigen::Ref<const Matrix>& u_rows,
                            const Eigen::Ref<const Matrix>& mesh);

// Checkpoint: "deeponet <m> <d> <q>" header followed by the branch and trunk
// mlp checkpoints.
void save_deeponet(std::ostream& os, const DeepOnetModel& model);
DeepOnetModel load_deeponet(std::istream& is);

}  // namespace bonet
