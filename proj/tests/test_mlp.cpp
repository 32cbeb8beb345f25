#include <doctest.h>

#include <cmath>
#include <sstream>

#include "bonet/mlp.hpp"

using namespace bonet;

namespace {

// scale-aware relative error against a reference gradient; tiny entries are
// measured against the gradient's own scale
double grad_rel_error(const ParamVector& got, const ParamVector& want) {
  const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-12);
  double worst = 0.0;
  for (Index i = 0; i < got.size(); ++i) {
    const double denom = std::max({std::abs(got[i]), std::abs(want[i]), 1e-3 * scale});
    worst = std::max(worst, std::abs(got[i] - want[i]) / denom);
  }
  return worst;
}

Mlp seeded_mlp(const std::vector<int>& dims, Activation act, std::uint64_t seed) {
  UniformStream rng(seed);
  return make_mlp_glorot(dims, act, rng);
}

}  // namespace

TEST_CASE("zero-parameter network maps everything to zero") {
  const Mlp net = make_mlp({3, 4, 2}, Activation::Tanh);
  const Vector out = mlp_forward(net, Vector::Constant(3, 1.7));
  CHECK(out.size() == 2);
  CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("1-1-1 identity-like tanh network maps 0 to 0") {
  Mlp net = make_mlp({1, 1, 1}, Activation::Tanh);
  net.weights[0](0, 0) = 1.0;
  net.weights[1](0, 0) = 1.0;
  const Vector out = mlp_forward(net, Vector::Zero(1));
  CHECK(out[0] == 0.0);
}

TEST_CASE("2-3-1 tanh forward matches a straight-line hand evaluation") {
  const Mlp net = seeded_mlp({2, 3, 1}, Activation::Tanh, 42);
  Vector x(2);
  x << 0.3, -0.7;

  // independent scalar re-evaluation of the composition
  double hidden[3];
  for (int i = 0; i < 3; ++i) {
    double z = net.biases[0][i];
    for (int j = 0; j < 2; ++j) z += net.weights[0](i, j) * x[j];
    hidden[i] = std::tanh(z);
  }
  double expected = net.biases[1][0];
  for (int i = 0; i < 3; ++i) expected += net.weights[1](0, i) * hidden[i];

  const Vector out = mlp_forward(net, x);
  CHECK(out[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("forward is pure") {
  const Mlp net = seeded_mlp({4, 8, 8, 2}, Activation::Tanh, 7);
  Vector x(4);
  x << 0.1, -0.2, 0.5, 2.0;
  const Vector a = mlp_forward(net, x);
  const Vector b = mlp_forward(net, x);
  CHECK(a == b);
}

TEST_CASE("forward rejects a wrong input length") {
  const Mlp net = make_mlp({3, 2}, Activation::Tanh);
  CHECK_THROWS_AS(mlp_forward(net, Vector::Zero(4)), ShapeError);
}

TEST_CASE("flatten/unflatten round trip is exact") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u}) {
    UniformStream shape_rng(seed);
    std::vector<int> dims;
    const int layers = 2 + static_cast<int>(shape_rng.next_below(3));
    for (int l = 0; l < layers; ++l) dims.push_back(1 + static_cast<int>(shape_rng.next_below(6)));
    Mlp net = seeded_mlp(dims, seed % 2 ? Activation::Tanh : Activation::Relu, seed * 11);
    const ParamVector theta = mlp_flatten(net);
    CHECK(theta.size() == mlp_param_count(net));
    Mlp other = make_mlp(dims, net.activation);
    mlp_unflatten(other, theta);
    const ParamVector again = mlp_flatten(other);
    CHECK(theta == again);
    for (Index l = 0; l < net.layer_count(); ++l) {
      CHECK(net.weights[l] == other.weights[l]);
      CHECK(net.biases[l] == other.biases[l]);
    }
  }
}

TEST_CASE("flatten layout is layer-major with row-major weights before biases") {
  Mlp net = make_mlp({2, 2}, Activation::Tanh);
  net.weights[0] << 1.0, 2.0, 3.0, 4.0;
  net.biases[0] << 5.0, 6.0;
  const ParamVector theta = mlp_flatten(net);
  ParamVector expected(6);
  expected << 1, 2, 3, 4, 5, 6;
  CHECK(theta == expected);
}

TEST_CASE("backward with zero upstream gives zero gradients") {
  const Mlp net = seeded_mlp({3, 5, 2}, Activation::Tanh, 3);
  const MlpGrad g = mlp_backward(net, Vector::Constant(3, 0.4), Vector::Zero(2));
  CHECK(g.param_grad.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.input_grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single linear layer: weight gradient is upstream outer input") {
  Mlp net = seeded_mlp({3, 2}, Activation::Tanh, 5);  // one layer, so no activation applies
  Vector x(3);
  x << 0.5, -1.0, 2.0;
  Vector up(2);
  up << 2.0, -3.0;
  const MlpGrad g = mlp_backward(net, x, up);
  Index pos = 0;
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j) CHECK(g.param_grad[pos++] == doctest::Approx(up[i] * x[j]));
  for (Index i = 0; i < 2; ++i) CHECK(g.param_grad[pos++] == doctest::Approx(up[i]));
  // input gradient of a linear map is W^T upstream
  const Vector want = net.weights[0].transpose() * up;
  CHECK((g.input_grad - want).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("finite_diff_grad: constant and quadratic closed forms") {
  const auto constant = [](const ParamVector&) { return 3.25; };
  ParamVector theta(2);
  theta << 1.0, -2.0;
  CHECK(finite_diff_grad(constant, theta, 1e-6).cwiseAbs().maxCoeff() < 1e-9);

  const auto quad = [](const ParamVector& t) { return 0.5 * t.squaredNorm(); };
  const ParamVector g = finite_diff_grad(quad, theta, 1e-6);
  CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g[1] == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("analytic gradient matches central finite differences") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Activation act = seed % 3 == 0 ? Activation::Relu : Activation::Tanh;
    Mlp net = seeded_mlp({3, 6, 4, 2}, act, seed * 101);
    UniformStream rng(seed);
    Vector x(3), up(2);
    for (Index i = 0; i < 3; ++i) x[i] = 2.0 * rng.next() - 1.0;
    for (Index i = 0; i < 2; ++i) up[i] = 2.0 * rng.next() - 1.0;

    const MlpGrad analytic = mlp_backward(net, x, up);
    Mlp probe = net;
    const auto f = [&](const ParamVector& theta) {
      mlp_unflatten(probe, theta);
      return up.dot(mlp_forward(probe, x));
    };
    const ParamVector fd = finite_diff_grad(f, mlp_flatten(net), 1e-6);
    CHECK(grad_rel_error(analytic.param_grad, fd) < 1e-6);

    // same oracle for the input gradient
    Vector fd_x(3);
    for (Index i = 0; i < 3; ++i) {
      Vector xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      fd_x[i] = (up.dot(mlp_forward(net, xp)) - up.dot(mlp_forward(net, xm))) / 2e-6;
    }
    CHECK(grad_rel_error(analytic.input_grad, fd_x) < 1e-6);
  }
}

TEST_CASE("batched forward and backward agree with the per-sample path") {
  const Mlp net = seeded_mlp({4, 7, 3}, Activation::Tanh, 9);
  UniformStream rng(77);
  Matrix inputs(5, 4), upstream(5, 3);
  for (Index r = 0; r < 5; ++r) {
    for (Index c = 0; c < 4; ++c) inputs(r, c) = 2.0 * rng.next() - 1.0;
    for (Index c = 0; c < 3; ++c) upstream(r, c) = 2.0 * rng.next() - 1.0;
  }

  const Matrix batch_out = mlp_forward_batch(net, inputs);
  ParamVector grad_sum = ParamVector::Zero(mlp_param_count(net));
  for (Index r = 0; r < 5; ++r) {
    const Vector out = mlp_forward(net, inputs.row(r).transpose());
    CHECK((batch_out.row(r).transpose() - out).cwiseAbs().maxCoeff() < 1e-13);
    grad_sum += mlp_backward(net, inputs.row(r).transpose(), upstream.row(r).transpose()).param_grad;
  }
  const ParamVector batch_grad = mlp_backward_batch(net, inputs, upstream);
  CHECK(grad_rel_error(batch_grad, grad_sum) < 1e-10);
}

TEST_CASE("dropout-masked gradient matches finite differences of the masked loss") {
  const Mlp net = seeded_mlp({3, 5, 5, 1}, Activation::Tanh, 13);
  UniformStream rng(5);
  Matrix inputs(4, 3), upstream(4, 1);
  for (Index r = 0; r < 4; ++r) {
    for (Index c = 0; c < 3; ++c) inputs(r, c) = 2.0 * rng.next() - 1.0;
    upstream(r, 0) = 2.0 * rng.next() - 1.0;
  }
  std::vector<Matrix> masks;
  for (int l = 0; l < 2; ++l) {
    Matrix mk(4, 5);
    for (Index r = 0; r < 4; ++r)
      for (Index c = 0; c < 5; ++c) mk(r, c) = rng.next() < 0.3 ? 0.0 : 1.0 / 0.7;
    masks.push_back(mk);
  }

  const ParamVector analytic = mlp_backward_batch(net, inputs, upstream, &masks);
  Mlp probe = net;
  const auto f = [&](const ParamVector& theta) {
    mlp_unflatten(probe, theta);
    const Matrix out = mlp_forward_batch_masked(probe, inputs, &masks);
    return (out.array() * upstream.array()).sum();
  };
  const ParamVector fd = finite_diff_grad(f, mlp_flatten(net), 1e-6);
  CHECK(grad_rel_error(analytic, fd) < 1e-6);
}

TEST_CASE("glorot init respects the fan bound and is seed-deterministic") {
  const std::vector<int> dims{10, 20, 5};
  const Mlp a = seeded_mlp(dims, Activation::Tanh, 123);
  const Mlp b = seeded_mlp(dims, Activation::Tanh, 123);
  for (Index l = 0; l < a.layer_count(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l].cwiseAbs().maxCoeff() == 0.0);
    const double bound = std::sqrt(6.0 / (dims[l] + dims[l + 1]));
    CHECK(a.weights[l].cwiseAbs().maxCoeff() <= bound);
  }
}

TEST_CASE("checkpoint round trip preserves parameters exactly") {
  const Mlp net = seeded_mlp({4, 6, 3}, Activation::Relu, 321);
  std::stringstream ss;
  save_mlp(ss, net);
  const Mlp loaded = load_mlp(ss);
  CHECK(loaded.layer_dims == net.layer_dims);
  CHECK(loaded.activation == net.activation);
  CHECK(mlp_flatten(loaded) == mlp_flatten(net));
}

TEST_CASE("checkpoint loader rejects malformed input") {
  std::stringstream ss("mlx 2 tanh\n");
  CHECK_THROWS_AS(load_mlp(ss), IoError);
}
