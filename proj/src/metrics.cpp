#include "bonet/metrics.hpp"

#include <cmath>

namespace bonet {

std::pair<double, double> relative_errors(const Eigen::Ref<const Vector>& pred_mean,
                                          const Eigen::Ref<const Vector>& truth) {
  if (pred_mean.size() != truth.size())
    throw ShapeError("relative_errors: prediction/truth length mismatch");
  const double l1 = truth.lpNorm<1>();
  const double l2 = truth.norm();
  if (l1 == 0.0 || l2 == 0.0)
    throw NumericError("relative_errors: zero-norm truth makes the metric undefined");
  const Vector diff = pred_mean - truth;
  return {100.0 * diff.lpNorm<1>() / l1, 100.0 * diff.norm() / l2};
}

PredictionBand ensemble_band(const std::vector<ParamVector>& ensemble,
                             const Eigen::Ref<const Vector>& u_disc,
                             const Eigen::Ref<const Matrix>& mesh,
                             const DeepOnetModel& model_template,
                             const Eigen::Ref<const Vector>& truth) {
  const Index members = static_cast<Index>(ensemble.size());
  if (members < 2) throw ConfigError("ensemble_band: need at least two ensemble members");
  if (truth.size() != mesh.rows())
    throw ShapeError("ensemble_band: truth length must match the mesh");

  DeepOnetModel model = model_template;
  // Welford accumulation per mesh point; identical members yield an exactly
  // zero spread.
  Vector mean = Vector::Zero(mesh.rows());
  Vector m2 = Vector::Zero(mesh.rows());
  double count = 0.0;
  for (const ParamVector& theta : ensemble) {
    deeponet_unflatten(model, theta);
    const Vector traj = predict_trajectory(model, u_disc, mesh);
    count += 1.0;
    const Vector delta = traj - mean;
    mean += delta / count;
    m2 += delta.cwiseProduct(traj - mean);
  }

  PredictionBand band;
  band.mesh = mesh;
  band.mean = mean;
  band.truth = truth;
  const Vector var = (m2 / static_cast<double>(members - 1)).cwiseMax(0.0);
  const Vector spread = 2.0 * var.cwiseSqrt();
  band.lower = mean - spread;
  band.upper = mean + spread;
  return band;
}

double coverage_ratio(const PredictionBand& band) {
  const Index k = band.mesh.rows();
  if (k == 0 || band.mean.size() != k || band.lower.size() != k || band.upper.size() != k ||
      band.truth.size() != k)
    throw ShapeError("coverage_ratio: inconsistent band");
  Index inside = 0;
  for (Index i = 0; i < k; ++i)
    if (band.lower[i] <= band.truth[i] && band.truth[i] <= band.upper[i]) ++inside;
  return 100.0 * static_cast<double>(inside) / static_cast<double>(k);
}

std::pair<double, double> evaluate_test_errors(const DeepOnetModel& model,
                                               const OperatorDataset& data) {
  const Index t = data.test_u.rows();
  if (t == 0) throw ConfigError("evaluate_test_errors: dataset has no test trajectories");
  const Matrix pred = predict_trajectories(model, data.test_u, data.test_mesh);
  double e1 = 0.0, e2 = 0.0;
  for (Index i = 0; i < t; ++i) {
    const auto [a, b] = relative_errors(pred.row(i).transpose(), data.test_truth.row(i).transpose());
    e1 += a;
    e2 += b;
  }
  return {e1 / static_cast<double>(t), e2 / static_cast<double>(t)};
}

}  // namespace bonet
