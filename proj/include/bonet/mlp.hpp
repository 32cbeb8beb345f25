#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "bonet/rng.hpp"
#include "bonet/types.hpp"

namespace bonet {

enum class Activation { Tanh, Relu };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Dense feed-forward network. The activation applies to all hidden layers;
// the output layer is linear.
struct Mlp {
  std::vector<int> layer_dims;    // input, hidden..., output widths
  std::vector<Matrix> weights;    // weights[l] is layer_dims[l+1] x layer_dims[l]
  std::vector<Vector> biases;     // biases[l] has length layer_dims[l+1]
  Activation activation = Activation::Tanh;

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  Index layer_count() const { return static_cast<Index>(weights.size()); }
};

// Zero-initialized network of the given shape.
Mlp make_mlp(const std::vector<int>& layer_dims, Activation act);

// Glorot-uniform initialization, bound sqrt(6/(fan_in+fan_out)), biases zero.
Mlp make_mlp_glorot(const std::vector<int>& layer_dims, Activation act, UniformStream& rng);

Index mlp_param_count(const Mlp& net);

// Flatten/unflatten between the network and its ParamVector layout
// (layer-major, row-major weights before biases). Round trip is exact.
ParamVector mlp_flatten(const Mlp& net);
void mlp_unflatten(Mlp& net, const Eigen::Ref<const ParamVector>& theta);

Vector mlp_forward(const Mlp& net, const Eigen::Ref<const Vector>& x);

// Rows of `inputs` are samples; returns one output row per sample.
Matrix mlp_forward_batch(const Mlp& net, const Eigen::Ref<const Matrix>& inputs);

struct MlpGrad {
  ParamVector param_grad;
  Vector input_grad;
};

// Reverse-mode gradient of <upstream, mlp_forward(net, x)> with respect to
// all parameters and to x.
MlpGrad mlp_backward(const Mlp& net, const Eigen::Ref<const Vector>& x,
                     const Eigen::Ref<const Vector>& upstream);

// Cached activations from a batched forward pass, consumed by the matching
// backward pass so the forward work is not repeated.
struct MlpTape {
  std::vector<Matrix> acts;    // acts[l]: actual input to layer l
  std::vector<Matrix> hidden;  // unmasked hidden activations
  Matrix output;
};

// Batched forward with recording. Optional per-layer dropout masks apply
// multiplicatively to the hidden activations (mask[l] has the shape of hidden
// layer l's activation map, rows = samples); pass nullptr for no masks.
const Matrix& mlp_forward_tape(const Mlp& net, const Eigen::Ref<const Matrix>& inputs,
                               const std::vector<Matrix>* hidden_masks, MlpTape& tape);

// Gradient of sum_i <upstream_i, net(x_i)> using a recorded tape. The same
// masks passed to the forward must be passed here.
ParamVector mlp_backward_tape(const Mlp& net, const MlpTape& tape,
                              const Eigen::Ref<const Matrix>& upstream,
                              const std::vector<Matrix>* hidden_masks = nullptr);

// One-shot batched reverse mode (forward + backward).
ParamVector mlp_backward_batch(const Mlp& net, const Eigen::Ref<const Matrix>& inputs,
                               const Eigen::Ref<const Matrix>& upstream,
                               const std::vector<Matrix>* hidden_masks = nullptr);

// Forward pass variant used by dropout training; masks as above.
Matrix mlp_forward_batch_masked(const Mlp& net, const Eigen::Ref<const Matrix>& inputs,
                                const std::vector<Matrix>* hidden_masks);

// Central-difference gradient of an arbitrary scalar function of a parameter
// vector. Test oracle; independent of the reverse-mode path.
ParamVector finite_diff_grad(const std::function<double(const ParamVector&)>& f,
                             const ParamVector& theta, double h);

// Checkpoint format: "mlp <L> <activation>" header, one "layer <in> <out>"
// line per layer, then parameter values in ParamVector order.
void save_mlp(std::ostream& os, const Mlp& net);
Mlp load_mlp(std::istream& is);

}  // namespace bonet
