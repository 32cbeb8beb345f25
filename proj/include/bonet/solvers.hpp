#pragma once

#include "bonet/types.hpp"

namespace bonet {

// Space-time solution field on a uniform grid: rows follow x, columns follow
// t (column 0 is the initial condition, the last column is t = t_final).
struct SolutionField {
  Vector x;       // nx spatial points
  Vector t;       // nt+1 time points
  Matrix values;  // nx x (nt+1)

  Vector final_slice() const { return values.col(values.cols() - 1); }
};

// Piecewise-linear interpolation of (grid, values) at x; clamps outside the
// grid range.
double interp_linear(const Eigen::Ref<const Vector>& grid,
                     const Eigen::Ref<const Vector>& values, double x);

// Cumulative trapezoidal integral of u sampled on a uniform grid; result[0] = 0.
Vector solve_antiderivative(const Eigen::Ref<const Vector>& u_disc,
                            const Eigen::Ref<const Vector>& grid);

// Gravity pendulum s1' = s2, s2' = -k sin(s1) + u(t), zero initial state,
// solved by classical RK4 with `substeps` steps per grid interval; u is
// linearly interpolated between sensors. Returns s1 on the grid.
Vector solve_pendulum(const Eigen::Ref<const Vector>& u_disc,
                      const Eigen::Ref<const Vector>& grid, double k, int substeps = 10);

// ds/dt = D d2s/dx2 + k s^2 + u(x) on [0,1] x [0,t_final], zero boundary and
// initial conditions. Crank-Nicolson on the diffusion term, explicit k s^2 +
// u; u is interpolated from `u_grid` onto the nx-point solver grid.
SolutionField solve_diffusion_reaction(const Eigen::Ref<const Vector>& u_disc,
                                       const Eigen::Ref<const Vector>& u_grid, double diffusivity,
                                       double reaction_k, int nx, int nt, double t_final = 1.0);

// ds/dt + ds/dx - D d2s/dx2 = 0 on a periodic domain [0,1), s(x,0) = u0(x),
// Crank-Nicolson with central differences for both space derivatives; each
// step solves a cyclic tridiagonal system.
SolutionField solve_advection_diffusion(const Eigen::Ref<const Vector>& u0_disc,
                                        const Eigen::Ref<const Vector>& u0_grid,
                                        double diffusivity, int nx, int nt, double t_final = 1.0);

}  // namespace bonet
