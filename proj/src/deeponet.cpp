#include "bonet/deeponet.hpp"

#include <istream>
#include <ostream>
#include <string>

namespace bonet {

void validate_model(const DeepOnetModel& model) {
  if (model.branch.output_dim() != model.q || model.trunk.output_dim() != model.q)
    throw ShapeError("deeponet: branch/trunk output widths must both equal q");
  if (model.branch.input_dim() != model.m)
    throw ShapeError("deeponet: branch input width must equal sensor count m");
  if (model.trunk.input_dim() != model.d)
    throw ShapeError("deeponet: trunk input width must equal query dimension d");
}

DeepOnetModel make_deeponet(int m, int d, int q, const std::vector<int>& branch_hidden,
                            const std::vector<int>& trunk_hidden, Activation act,
                            UniformStream& rng) {
  std::vector<int> bdims{m};
  bdims.insert(bdims.end(), branch_hidden.begin(), branch_hidden.end());
  bdims.push_back(q);
  std::vector<int> tdims{d};
  tdims.insert(tdims.end(), trunk_hidden.begin(), trunk_hidden.end());
  tdims.push_back(q);
  DeepOnetModel model;
  model.m = m;
  model.d = d;
  model.q = q;
  model.branch = make_mlp_glorot(bdims, act, rng);
  model.trunk = make_mlp_glorot(tdims, act, rng);
  validate_model(model);
  return model;
}

Index deeponet_param_count(const DeepOnetModel& model) {
  return mlp_param_count(model.branch) + mlp_param_count(model.trunk);
}

Index branch_param_count(const DeepOnetModel& model) { return mlp_param_count(model.branch); }

ParamVector deeponet_flatten(const DeepOnetModel& model) {
  ParamVector theta(deeponet_param_count(model));
  theta.head(mlp_param_count(model.branch)) = mlp_flatten(model.branch);
  theta.tail(mlp_param_count(model.trunk)) = mlp_flatten(model.trunk);
  return theta;
}

void deeponet_unflatten(DeepOnetModel& model, const Eigen::Ref<const ParamVector>& theta) {
  const Index nb = mlp_param_count(model.branch);
  const Index nt = mlp_param_count(model.trunk);
  if (theta.size() != nb + nt)
    throw ShapeError("deeponet: parameter vector length does not match model");
  mlp_unflatten(model.branch, theta.head(nb));
  mlp_unflatten(model.trunk, theta.tail(nt));
}

double deeponet_forward(const DeepOnetModel& model, const Eigen::Ref<const Vector>& u_disc,
                        const Eigen::Ref<const Vector>& y) {
  const Vector b = mlp_forward(model.branch, u_disc);
  const Vector t = mlp_forward(model.trunk, y);
  return b.dot(t);
}

namespace {

void check_batch(const DeepOnetModel& model, const TrainingBatch& batch) {
  if (batch.size() == 0) throw ConfigError("deeponet: empty batch");
  if (batch.u_disc.cols() != model.m || batch.y.cols() != model.d ||
      batch.u_disc.rows() != batch.size() || batch.y.rows() != batch.size())
    throw ShapeError("deeponet: batch shapes do not match model");
}

}  // namespace

Vector deeponet_outputs(const DeepOnetModel& model, const TrainingBatch& batch) {
  check_batch(model, batch);
  const Matrix b = mlp_forward_batch(model.branch, batch.u_disc);
  const Matrix t = mlp_forward_batch(model.trunk, batch.y);
  return (b.array() * t.array()).rowwise().sum();
}

double deeponet_loss(const DeepOnetModel& model, const TrainingBatch& batch) {
  const Vector r = deeponet_outputs(model, batch) - batch.targets;
  return r.squaredNorm() / static_cast<double>(batch.size());
}

double deeponet_sumsq(const DeepOnetModel& model, const TrainingBatch& batch) {
  const Vector r = deeponet_outputs(model, batch) - batch.targets;
  return r.squaredNorm();
}

ParamVector deeponet_sumsq_and_grad(const DeepOnetModel& model, const TrainingBatch& batch,
                                    double scale, ParamBlock block, double& sum_sq) {
  check_batch(model, batch);
  if (!std::isfinite(scale)) throw ConfigError("deeponet_grad: scale must be finite");

  MlpTape branch_tape, trunk_tape;
  const Matrix& b = mlp_forward_tape(model.branch, batch.u_disc, nullptr, branch_tape);
  const Matrix& t = mlp_forward_tape(model.trunk, batch.y, nullptr, trunk_tape);
  const Vector r = (b.array() * t.array()).rowwise().sum().matrix() - batch.targets;
  sum_sq = r.squaredNorm();

  const Index nb = mlp_param_count(model.branch);
  const Index nt = mlp_param_count(model.trunk);
  ParamVector grad = ParamVector::Zero(nb + nt);
  const Vector w = 2.0 * scale * r;
  if (block != ParamBlock::TrunkOnly) {
    const Matrix upstream_b = t.array().colwise() * w.array();
    grad.head(nb) = mlp_backward_tape(model.branch, branch_tape, upstream_b);
  }
  if (block != ParamBlock::BranchOnly) {
    const Matrix upstream_t = b.array().colwise() * w.array();
    grad.tail(nt) = mlp_backward_tape(model.trunk, trunk_tape, upstream_t);
  }
  return grad;
}

ParamVector deeponet_grad(const DeepOnetModel& model, const TrainingBatch& batch, double scale,
                          ParamBlock block) {
  double unused = 0.0;
  return deeponet_sumsq_and_grad(model, batch, scale, block, unused);
}

Vector predict_trajectory(const DeepOnetModel& model, const Eigen::Ref<const Vector>& u_disc,
                          const Eigen::Ref<const Matrix>& mesh) {
  if (mesh.rows() == 0) throw ConfigError("predict_trajectory: empty mesh");
  const Vector b = mlp_forward(model.branch, u_disc);
  Vector out(mesh.rows());
  for (Index k = 0; k < mesh.rows(); ++k) {
    const Vector t = mlp_forward(model.trunk, mesh.row(k).transpose());
    out[k] = b.dot(t);
  }
  return out;
}

Matrix predict_trajectories(const DeepOnetModel& model, const Eigen::Ref<const Matrix>& u_rows,
                            const Eigen::Ref<const Matrix>& mesh) {
  const Matrix b = mlp_forward_batch(model.branch, u_rows);
  const Matrix t = mlp_forward_batch(model.trunk, mesh);
  return b * t.transpose();
}

void save_deeponet(std::ostream& os, const DeepOnetModel& model) {
  os << "deeponet " << model.m << ' ' << model.d << ' ' << model.q << '\n';
  save_mlp(os, model.branch);
  save_mlp(os, model.trunk);
}

DeepOnetModel load_deeponet(std::istream& is) {
  std::string tag;
  DeepOnetModel model;
  if (!(is >> tag >> model.m >> model.d >> model.q) || tag != "deeponet")
    throw IoError("checkpoint: expected 'deeponet <m> <d> <q>' header");
  model.branch = load_mlp(is);
  model.trunk = load_mlp(is);
  validate_model(model);
  return model;
}

}  // namespace bonet
