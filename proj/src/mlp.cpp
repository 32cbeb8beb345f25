#include "bonet/mlp.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace bonet {

const char* activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "relu";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw ConfigError("unknown activation '" + name + "' (expected tanh or relu)");
}

namespace {

void check_dims(const std::vector<int>& layer_dims) {
  if (layer_dims.size() < 2) throw ConfigError("mlp needs at least input and output widths");
  for (int d : layer_dims)
    if (d <= 0) throw ConfigError("mlp layer widths must be positive");
}

inline double act_eval(Activation a, double z) {
  return a == Activation::Tanh ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}

inline double act_deriv_from_input(Activation a, double z) {
  if (a == Activation::Tanh) {
    const double t = std::tanh(z);
    return 1.0 - t * t;
  }
  return z > 0.0 ? 1.0 : 0.0;
}

}  // namespace

Mlp make_mlp(const std::vector<int>& layer_dims, Activation act) {
  check_dims(layer_dims);
  Mlp net;
  net.layer_dims = layer_dims;
  net.activation = act;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    net.weights.push_back(Matrix::Zero(layer_dims[l + 1], layer_dims[l]));
    net.biases.push_back(Vector::Zero(layer_dims[l + 1]));
  }
  return net;
}

Mlp make_mlp_glorot(const std::vector<int>& layer_dims, Activation act, UniformStream& rng) {
  Mlp net = make_mlp(layer_dims, act);
  for (Index l = 0; l < net.layer_count(); ++l) {
    const double bound = std::sqrt(6.0 / (layer_dims[l] + layer_dims[l + 1]));
    Matrix& w = net.weights[l];
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j) w(i, j) = bound * (2.0 * rng.next() - 1.0);
  }
  return net;
}

Index mlp_param_count(const Mlp& net) {
  Index n = 0;
  for (Index l = 0; l < net.layer_count(); ++l)
    n += net.weights[l].size() + net.biases[l].size();
  return n;
}

ParamVector mlp_flatten(const Mlp& net) {
  ParamVector theta(mlp_param_count(net));
  Index pos = 0;
  for (Index l = 0; l < net.layer_count(); ++l) {
    const Matrix& w = net.weights[l];
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j) theta[pos++] = w(i, j);
    theta.segment(pos, net.biases[l].size()) = net.biases[l];
    pos += net.biases[l].size();
  }
  return theta;
}

void mlp_unflatten(Mlp& net, const Eigen::Ref<const ParamVector>& theta) {
  if (theta.size() != mlp_param_count(net))
    throw ShapeError("parameter vector length does not match network shape");
  Index pos = 0;
  for (Index l = 0; l < net.layer_count(); ++l) {
    Matrix& w = net.weights[l];
    for (Index i = 0; i < w.rows(); ++i)
      for (Index j = 0; j < w.cols(); ++j) w(i, j) = theta[pos++];
    net.biases[l] = theta.segment(pos, net.biases[l].size());
    pos += net.biases[l].size();
  }
}

Vector mlp_forward(const Mlp& net, const Eigen::Ref<const Vector>& x) {
  if (x.size() != net.input_dim())
    throw ShapeError("mlp_forward: input length " + std::to_string(x.size()) +
                     " does not match input width " + std::to_string(net.input_dim()));
  Vector a = x;
  const Index last = net.layer_count() - 1;
  for (Index l = 0; l <= last; ++l) {
    Vector z = net.weights[l] * a + net.biases[l];
    if (l < last)
      for (Index i = 0; i < z.size(); ++i) z[i] = act_eval(net.activation, z[i]);
    a = std::move(z);
  }
  return a;
}

Matrix mlp_forward_batch(const Mlp& net, const Eigen::Ref<const Matrix>& inputs) {
  return mlp_forward_batch_masked(net, inputs, nullptr);
}

Matrix mlp_forward_batch_masked(const Mlp& net, const Eigen::Ref<const Matrix>& inputs,
                                const std::vector<Matrix>* hidden_masks) {
  if (inputs.cols() != net.input_dim())
    throw ShapeError("mlp_forward_batch: column count does not match input width");
  Matrix a = inputs;
  const Index last = net.layer_count() - 1;
  for (Index l = 0; l <= last; ++l) {
    Matrix z = a * net.weights[l].transpose();
    z.rowwise() += net.biases[l].transpose();
    if (l < last) {
      if (net.activation == Activation::Tanh)
        z = z.array().tanh();
      else
        z = z.array().max(0.0);
      if (hidden_masks) z.array() *= (*hidden_masks)[static_cast<std::size_t>(l)].array();
    }
    a = std::move(z);
  }
  return a;
}

const Matrix& mlp_forward_tape(const Mlp& net, const Eigen::Ref<const Matrix>& inputs,
                               const std::vector<Matrix>* hidden_masks, MlpTape& tape) {
  if (inputs.cols() != net.input_dim())
    throw ShapeError("mlp_forward_tape: column count does not match input width");
  const Index layers = net.layer_count();
  tape.acts.resize(static_cast<std::size_t>(layers));
  tape.hidden.resize(static_cast<std::size_t>(layers));
  tape.acts[0] = inputs;
  for (Index l = 0; l < layers; ++l) {
    Matrix z = tape.acts[static_cast<std::size_t>(l)] * net.weights[l].transpose();
    z.rowwise() += net.biases[l].transpose();
    if (l < layers - 1) {
      if (net.activation == Activation::Tanh)
        tape.hidden[static_cast<std::size_t>(l)] = z.array().tanh();
      else
        tape.hidden[static_cast<std::size_t>(l)] = z.array().max(0.0);
      if (hidden_masks)
        tape.acts[static_cast<std::size_t>(l + 1)] =
            tape.hidden[static_cast<std::size_t>(l)].cwiseProduct(
                (*hidden_masks)[static_cast<std::size_t>(l)]);
      else
        tape.acts[static_cast<std::size_t>(l + 1)] = tape.hidden[static_cast<std::size_t>(l)];
    } else {
      tape.output = std::move(z);
    }
  }
  return tape.output;
}

ParamVector mlp_backward_tape(const Mlp& net, const MlpTape& tape,
                              const Eigen::Ref<const Matrix>& upstream,
                              const std::vector<Matrix>* hidden_masks) {
  if (upstream.cols() != net.output_dim())
    throw ShapeError("mlp_backward_tape: upstream shape mismatch");
  const Index layers = net.layer_count();
  ParamVector grad = ParamVector::Zero(mlp_param_count(net));
  Matrix g = upstream;
  Index pos = grad.size();
  for (Index l = layers - 1; l >= 0; --l) {
    Matrix gz = std::move(g);
    if (l < layers - 1) {
      const Matrix& h = tape.hidden[static_cast<std::size_t>(l)];
      if (hidden_masks) gz.array() *= (*hidden_masks)[static_cast<std::size_t>(l)].array();
      // activation derivative from the activation value itself
      if (net.activation == Activation::Tanh)
        gz.array() *= 1.0 - h.array().square();
      else
        gz.array() *= (h.array() > 0.0).cast<double>();
    }
    const Index nb = net.biases[l].size();
    const Index nw = net.weights[l].size();
    pos -= nb;
    grad.segment(pos, nb) = gz.colwise().sum();
    pos -= nw;
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> wg(
        grad.data() + pos, net.weights[l].rows(), net.weights[l].cols());
    wg = gz.transpose() * tape.acts[static_cast<std::size_t>(l)];
    if (l > 0) g = gz * net.weights[l];
  }
  return grad;
}

MlpGrad mlp_backward(const Mlp& net, const Eigen::Ref<const Vector>& x,
                     const Eigen::Ref<const Vector>& upstream) {
  if (upstream.size() != net.output_dim())
    throw ShapeError("mlp_backward: upstream length does not match output width");
  if (x.size() != net.input_dim())
    throw ShapeError("mlp_backward: input length does not match input width");

  const Index layers = net.layer_count();
  std::vector<Vector> acts(layers + 1);  // acts[0] = x, acts[l] = layer l output
  std::vector<Vector> pre(layers);
  acts[0] = x;
  for (Index l = 0; l < layers; ++l) {
    pre[l] = net.weights[l] * acts[l] + net.biases[l];
    if (l < layers - 1) {
      Vector a(pre[l].size());
      for (Index i = 0; i < a.size(); ++i) a[i] = act_eval(net.activation, pre[l][i]);
      acts[l + 1] = std::move(a);
    } else {
      acts[l + 1] = pre[l];
    }
  }

  MlpGrad out;
  out.param_grad = ParamVector::Zero(mlp_param_count(net));

  Vector g = upstream;  // gradient wrt layer output
  Index pos = out.param_grad.size();
  for (Index l = layers - 1; l >= 0; --l) {
    Vector gz = g;
    if (l < layers - 1)
      for (Index i = 0; i < gz.size(); ++i)
        gz[i] *= act_deriv_from_input(net.activation, pre[l][i]);
    const Index nb = net.biases[l].size();
    const Index nw = net.weights[l].size();
    pos -= nb;
    out.param_grad.segment(pos, nb) = gz;
    pos -= nw;
    // row-major weight block: rows follow gz, columns follow acts[l]
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> wg(
        out.param_grad.data() + pos, net.weights[l].rows(), net.weights[l].cols());
    wg = gz * acts[l].transpose();
    g = net.weights[l].transpose() * gz;
  }
  out.input_grad = std::move(g);
  return out;
}

ParamVector mlp_backward_batch(const Mlp& net, const Eigen::Ref<const Matrix>& inputs,
                               const Eigen::Ref<const Matrix>& upstream,
                               const std::vector<Matrix>* hidden_masks) {
  if (upstream.rows() != inputs.rows())
    throw ShapeError("mlp_backward_batch: upstream row count mismatch");
  MlpTape tape;
  mlp_forward_tape(net, inputs, hidden_masks, tape);
  return mlp_backward_tape(net, tape, upstream, hidden_masks);
}

ParamVector finite_diff_grad(const std::function<double(const ParamVector&)>& f,
                             const ParamVector& theta, double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_grad: h must be positive");
  ParamVector grad(theta.size());
  ParamVector probe = theta;
  for (Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double fp = f(probe);
    probe[i] = theta[i] - h;
    const double fm = f(probe);
    probe[i] = theta[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_grad: non-finite function evaluation");
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

void save_mlp(std::ostream& os, const Mlp& net) {
  os << "mlp " << net.layer_count() << ' ' << activation_name(net.activation) << '\n';
  for (Index l = 0; l < net.layer_count(); ++l)
    os << "layer " << net.layer_dims[l] << ' ' << net.layer_dims[l + 1] << '\n';
  const ParamVector theta = mlp_flatten(net);
  os.precision(17);
  for (Index i = 0; i < theta.size(); ++i) os << theta[i] << '\n';
}

Mlp load_mlp(std::istream& is) {
  std::string tag;
  Index layers = 0;
  std::string act;
  if (!(is >> tag >> layers >> act) || tag != "mlp")
    throw IoError("checkpoint: expected 'mlp <L> <activation>' header");
  std::vector<int> dims;
  for (Index l = 0; l < layers; ++l) {
    int in = 0, out = 0;
    if (!(is >> tag >> in >> out) || tag != "layer")
      throw IoError("checkpoint: expected 'layer <in> <out>' line");
    if (l == 0) dims.push_back(in);
    if (!dims.empty() && dims.back() != in)
      throw IoError("checkpoint: inconsistent layer widths");
    dims.push_back(out);
  }
  Mlp net = make_mlp(dims, activation_from_name(act));
  ParamVector theta(mlp_param_count(net));
  for (Index i = 0; i < theta.size(); ++i)
    if (!(is >> theta[i])) throw IoError("checkpoint: truncated parameter block");
  mlp_unflatten(net, theta);
  return net;
}

}  // namespace bonet
