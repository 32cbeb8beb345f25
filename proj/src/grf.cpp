#include "bonet/grf.hpp"

#include <Eigen/Cholesky>

namespace bonet {

namespace {

void check_spec(const GrfSpec& spec) {
  if (!(spec.length_scale > 0.0)) throw ConfigError("grf: length scale must be positive");
  if (!(spec.jitter > 0.0)) throw ConfigError("grf: jitter must be positive");
  if (spec.grid.size() < 1) throw ConfigError("grf: empty sensor grid");
  for (Index i = 1; i < spec.grid.size(); ++i)
    if (!(spec.grid[i] > spec.grid[i - 1]))
      throw ConfigError("grf: sensor grid must be strictly increasing");
}

}  // namespace

Matrix rbf_kernel_matrix(const GrfSpec& spec) {
  check_spec(spec);
  const Index m = spec.grid.size();
  Matrix k(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j <= i; ++j) {
      const double v = rbf_kernel(spec.grid[i], spec.grid[j], spec.length_scale);
      k(i, j) = v;
      k(j, i) = v;
    }
  return k;
}

GrfSampler::GrfSampler(const GrfSpec& spec) {
  Matrix k = rbf_kernel_matrix(spec);
  k.diagonal().array() += spec.jitter;
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success)
    throw NumericError("grf: kernel matrix is not positive definite; try a larger jitter");
  lower_ = llt.matrixL();
}

Vector GrfSampler::sample(NormalStream& rng) const {
  Vector z(lower_.rows());
  rng.fill(z);
  return lower_ * z;
}

Vector grf_sample(const GrfSpec& spec, NormalStream& rng) {
  return GrfSampler(spec).sample(rng);
}

Vector uniform_grid(Index m, double lo, double hi) {
  if (m < 2) throw ConfigError("uniform_grid: need at least two points");
  Vector g(m);
  const double h = (hi - lo) / static_cast<double>(m - 1);
  for (Index i = 0; i < m; ++i) g[i] = lo + h * static_cast<double>(i);
  g[m - 1] = hi;
  return g;
}

}  // namespace bonet
