#include <doctest.h>

#include <cmath>
#include <vector>

#include "bonet/energy.hpp"

using namespace bonet;

namespace {

DeepOnetModel toy_model(std::uint64_t seed) {
  UniformStream rng(seed);
  return make_deeponet(3, 1, 2, {4}, {4}, Activation::Tanh, rng);
}

TrainingBatch toy_batch(const DeepOnetModel& model, Index n, std::uint64_t seed) {
  UniformStream rng(seed);
  TrainingBatch batch;
  batch.u_disc.resize(n, model.m);
  batch.y.resize(n, model.d);
  batch.targets.resize(n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < model.m; ++c) batch.u_disc(r, c) = 2.0 * rng.next() - 1.0;
    batch.y(r, 0) = rng.next();
    batch.targets[r] = 2.0 * rng.next() - 1.0;
  }
  return batch;
}

TrainingBatch rows_of(const TrainingBatch& full, const std::vector<Index>& rows) {
  TrainingBatch sub;
  sub.u_disc.resize(static_cast<Index>(rows.size()), full.u_disc.cols());
  sub.y.resize(static_cast<Index>(rows.size()), full.y.cols());
  sub.targets.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sub.u_disc.row(static_cast<Index>(i)) = full.u_disc.row(rows[i]);
    sub.y.row(static_cast<Index>(i)) = full.y.row(rows[i]);
    sub.targets[static_cast<Index>(i)] = full.targets[rows[i]];
  }
  return sub;
}

double grad_rel_error(const ParamVector& got, const ParamVector& want) {
  const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-12);
  double worst = 0.0;
  for (Index i = 0; i < got.size(); ++i) {
    const double denom = std::max({std::abs(got[i]), std::abs(want[i]), 1e-3 * scale});
    worst = std::max(worst, std::abs(got[i] - want[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("energy closed forms: perfect fit, single residual, full batch") {
  // constant-output model: branch bias 1, trunk bias 1 -> output 1
  DeepOnetModel model;
  model.m = 1;
  model.d = 1;
  model.q = 1;
  model.branch = make_mlp({1, 1}, Activation::Tanh);
  model.trunk = make_mlp({1, 1}, Activation::Tanh);
  model.branch.biases[0][0] = 1.0;
  model.trunk.biases[0][0] = 1.0;

  EnergySpec spec;
  spec.noise_sigma = 1.0;
  spec.dataset_size = 1;

  TrainingBatch batch;
  batch.u_disc = Matrix::Zero(1, 1);
  batch.y = Matrix::Zero(1, 1);
  batch.targets = Vector::Constant(1, 1.0);
  CHECK(energy(model, batch, spec, true) == 0.0);

  batch.targets[0] = 3.0;  // residual -2: U = 4 / 2 = 2
  CHECK(energy(model, batch, spec, true) == doctest::Approx(2.0));
}

TEST_CASE("minibatch estimator with n = N equals the full energy") {
  const DeepOnetModel model = toy_model(3);
  const TrainingBatch batch = toy_batch(model, 6, 4);
  EnergySpec spec;
  spec.noise_sigma = 0.2;
  spec.dataset_size = 6;
  CHECK(energy(model, batch, spec, false) == energy(model, batch, spec, true));
}

TEST_CASE("averaging the estimator over all minibatches recovers the energy exactly") {
  const DeepOnetModel model = toy_model(11);
  const TrainingBatch full = toy_batch(model, 6, 12);
  EnergySpec spec;
  spec.noise_sigma = 0.15;
  spec.dataset_size = 6;

  // the prior enters every estimate once, so unbiasedness is unaffected
  for (PriorKind prior : {PriorKind::None, PriorKind::Gaussian}) {
    spec.prior = prior;
    spec.prior_sigma = 0.7;
    double sum = 0.0;
    int count = 0;
    for (Index i = 0; i < 6; ++i)
      for (Index j = i + 1; j < 6; ++j) {
        sum += energy(model, rows_of(full, {i, j}), spec, false);
        ++count;
      }
    CHECK(count == 15);
    const double u_full = energy(model, full, spec, true);
    CHECK(std::abs(sum / 15.0 - u_full) < 1e-10 * std::max(1.0, std::abs(u_full)));
  }
}

TEST_CASE("energy gradient: zero residual, pure prior, finite differences") {
  EnergySpec spec;
  spec.noise_sigma = 0.3;
  spec.dataset_size = 8;

  const DeepOnetModel model = toy_model(21);
  TrainingBatch batch = toy_batch(model, 8, 22);

  // zero residuals: overwrite targets with the model outputs
  batch.targets = deeponet_outputs(model, batch);
  CHECK(energy_grad(model, batch, spec).cwiseAbs().maxCoeff() == 0.0);

  // gaussian prior with zero residuals: grad = theta / prior_sigma^2
  spec.prior = PriorKind::Gaussian;
  spec.prior_sigma = 0.5;
  const ParamVector theta = deeponet_flatten(model);
  const ParamVector g = energy_grad(model, batch, spec);
  CHECK((g - theta / 0.25).cwiseAbs().maxCoeff() < 1e-12);

  // seeded case against the finite-difference oracle
  batch = toy_batch(model, 8, 23);
  DeepOnetModel probe = model;
  const auto f = [&](const ParamVector& t) {
    deeponet_unflatten(probe, t);
    return energy(probe, batch, spec, false);
  };
  const ParamVector analytic = energy_grad(model, batch, spec);
  const ParamVector fd = finite_diff_grad(f, theta, 1e-6);
  CHECK(grad_rel_error(analytic, fd) < 1e-6);
}

TEST_CASE("energy with a gaussian prior is positive for nonzero parameters") {
  const DeepOnetModel model = toy_model(31);
  TrainingBatch batch = toy_batch(model, 4, 32);
  batch.targets = deeponet_outputs(model, batch);  // zero residuals
  EnergySpec spec;
  spec.noise_sigma = 1.0;
  spec.dataset_size = 4;
  spec.prior = PriorKind::Gaussian;
  spec.prior_sigma = 2.0;
  CHECK(energy(model, batch, spec, true) > 0.0);
}

TEST_CASE("swap probability closed forms") {
  // equal energies and exact estimators: rate 1
  CHECK(swap_probability(5.0, 5.0, 5.0, 5.0, 0.1, 1.0, 0.5, 0.5, 0.0, 0.0) == 1.0);

  // tau_delta = 99, both differences 0.1: exp(9.9)
  const double r = swap_probability(1.1, 1.0, 2.1, 2.0, 0.01, 1.0, 0.5, 0.5, 0.0, 0.0);
  CHECK(r == doctest::Approx(std::exp(9.9)).epsilon(1e-12));

  // exact energies reduce to the raw exchange rate for any a1 + a2 = 1
  const double u1 = 3.7, u2 = 2.9, tau1 = 0.05, tau2 = 0.8;
  const double tau_delta = 1.0 / tau1 - 1.0 / tau2;
  const double want = std::exp(tau_delta * (u1 - u2));
  for (double a1 : {0.2, 0.5, 0.9}) {
    const double got = swap_probability(u1, u2, u1, u2, tau1, tau2, a1, 1.0 - a1, 0.0, 0.0);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("swap probability is monotone in the energy gap and in the corrections") {
  const double base = swap_probability(2.0, 1.5, 2.0, 1.5, 0.1, 1.0, 0.5, 0.5, 0.1, 0.1);
  const double larger_gap = swap_probability(2.5, 1.5, 2.5, 1.5, 0.1, 1.0, 0.5, 0.5, 0.1, 0.1);
  CHECK(larger_gap > base);
  const double more_noise = swap_probability(2.0, 1.5, 2.0, 1.5, 0.1, 1.0, 0.5, 0.5, 0.5, 0.1);
  CHECK(more_noise < base);
  const double more_noise2 = swap_probability(2.0, 1.5, 2.0, 1.5, 0.1, 1.0, 0.5, 0.5, 0.1, 0.5);
  CHECK(more_noise2 < base);
}

TEST_CASE("swap probability validates its inputs") {
  CHECK_THROWS_AS(swap_probability(1, 1, 1, 1, 1.0, 0.5, 0.5, 0.5, 0, 0), ConfigError);
  CHECK_THROWS_AS(swap_probability(1, 1, 1, 1, 0.1, 1.0, 0.7, 0.7, 0, 0), ConfigError);
  // equal temperatures degenerate to rate 1 rather than an error
  CHECK(swap_probability(9.0, 1.0, 4.0, 2.0, 0.5, 0.5, 0.5, 0.5, 0, 0) == 1.0);
}

TEST_CASE("variance tracker: constant stream, alternating stream, hand-unrolled values") {
  VarianceTracker tracker;
  tracker.decay = 0.9;
  for (int i = 0; i < 200; ++i) tracker.update(2.5);
  CHECK(tracker.ema_mean == doctest::Approx(2.5));
  CHECK(tracker.ema_var < 1e-12);

  // alternating +-1 with decay near 1 approaches unit variance
  VarianceTracker alt;
  alt.decay = 0.999;
  double x = 1.0;
  for (int i = 0; i < 20000; ++i) {
    alt.update(x);
    x = -x;
  }
  CHECK(alt.ema_var == doctest::Approx(1.0).epsilon(0.05));

  // two observations {0, 1} at decay 0.9: mean 0.1, var 0.09
  VarianceTracker two;
  two.decay = 0.9;
  two.update(0.0);
  two.update(1.0);
  CHECK(two.ema_mean == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(two.ema_var == doctest::Approx(0.09).epsilon(1e-15));

  // the functional form returns the updated copy
  const VarianceTracker next = update_variance(two, 1.0);
  CHECK(next.ema_mean > two.ema_mean);
}
