#pragma once

#include "bonet/rng.hpp"
#include "bonet/types.hpp"

namespace bonet {

// Mean-zero Gaussian random field with RBF covariance, sampled at fixed
// sensor locations.
struct GrfSpec {
  double length_scale = 0.2;
  Vector grid;             // strictly increasing sensor locations
  double jitter = 1e-10;   // added to the kernel diagonal
};

inline double rbf_kernel(double x1, double x2, double length_scale) {
  const double dx = x1 - x2;
  return std::exp(-dx * dx / (2.0 * length_scale * length_scale));
}

Matrix rbf_kernel_matrix(const GrfSpec& spec);

// Holds the Cholesky factor of K + jitter*I so repeated draws are cheap.
class GrfSampler {
 public:
  explicit GrfSampler(const GrfSpec& spec);

  Vector sample(NormalStream& rng) const;

  Index dim() const { return lower_.rows(); }

 private:
  Matrix lower_;
};

// One-shot draw: L z with z ~ N(0, I).
Vector grf_sample(const GrfSpec& spec, NormalStream& rng);

// Uniform grid of m points on [lo, hi], endpoints included.
Vector uniform_grid(Index m, double lo, double hi);

}  // namespace bonet
