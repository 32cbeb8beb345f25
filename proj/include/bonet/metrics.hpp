#pragma once

#include <utility>
#include <vector>

#include "bonet/dataset.hpp"
#include "bonet/deeponet.hpp"
#include "bonet/types.hpp"

namespace bonet {

// Pointwise ensemble statistics over a trajectory mesh; the band is the mean
// plus/minus twice the per-point ensemble standard deviation.
struct PredictionBand {
  Matrix mesh;   // K x d query points
  Vector mean;
  Vector lower;
  Vector upper;
  Vector truth;
};

// Relative L1 and L2 errors in percent: 100 * ||v - w|| / ||w||.
std::pair<double, double> relative_errors(const Eigen::Ref<const Vector>& pred_mean,
                                          const Eigen::Ref<const Vector>& truth);

// Evaluates every ensemble member over the mesh and forms the 2-sigma band
// with the unbiased (M-1) standard deviation. `model_template` supplies the
// architecture the parameter vectors are unflattened into.
PredictionBand ensemble_band(const std::vector<ParamVector>& ensemble,
                             const Eigen::Ref<const Vector>& u_disc,
                             const Eigen::Ref<const Matrix>& mesh,
                             const DeepOnetModel& model_template,
                             const Eigen::Ref<const Vector>& truth);

// Percent of mesh points whose true value lies inside [lower, upper],
// boundaries included.
double coverage_ratio(const PredictionBand& band);

// Mean (e1, e2) over the dataset's test trajectories for a point-estimate
// model; this is the per-epoch training diagnostic.
std::pair<double, double> evaluate_test_errors(const DeepOnetModel& model,
                                               const OperatorDataset& data);

}  // namespace bonet
