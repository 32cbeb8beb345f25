#include "bonet/solvers.hpp"

#include <algorithm>
#include <cmath>

namespace bonet {

double interp_linear(const Eigen::Ref<const Vector>& grid,
                     const Eigen::Ref<const Vector>& values, double x) {
  const Index n = grid.size();
  if (n != values.size() || n < 2) throw ShapeError("interp_linear: grid/value size mismatch");
  if (x <= grid[0]) return values[0];
  if (x >= grid[n - 1]) return values[n - 1];
  const double* begin = grid.data();
  const Index hi = std::upper_bound(begin, begin + n, x) - begin;
  const Index lo = hi - 1;
  const double w = (x - grid[lo]) / (grid[hi] - grid[lo]);
  return (1.0 - w) * values[lo] + w * values[hi];
}

Vector solve_antiderivative(const Eigen::Ref<const Vector>& u_disc,
                            const Eigen::Ref<const Vector>& grid) {
  if (u_disc.size() != grid.size()) throw ShapeError("antiderivative: grid/value size mismatch");
  Vector s = Vector::Zero(grid.size());
  for (Index i = 1; i < grid.size(); ++i)
    s[i] = s[i - 1] + 0.5 * (u_disc[i - 1] + u_disc[i]) * (grid[i] - grid[i - 1]);
  return s;
}

Vector solve_pendulum(const Eigen::Ref<const Vector>& u_disc,
                      const Eigen::Ref<const Vector>& grid, double k, int substeps) {
  if (u_disc.size() != grid.size()) throw ShapeError("pendulum: grid/value size mismatch");
  if (substeps < 1) throw ConfigError("pendulum: substeps must be >= 1");

  const Index m = grid.size();
  Vector s1_out(m);
  double s1 = 0.0, s2 = 0.0;
  s1_out[0] = s1;

  const auto force = [&](double t) { return interp_linear(grid, u_disc, t); };
  for (Index i = 0; i + 1 < m; ++i) {
    const double h = (grid[i + 1] - grid[i]) / substeps;
    double t = grid[i];
    for (int s = 0; s < substeps; ++s) {
      // classical RK4 on (s1, s2)
      const double k1a = s2;
      const double k1b = -k * std::sin(s1) + force(t);
      const double k2a = s2 + 0.5 * h * k1b;
      const double k2b = -k * std::sin(s1 + 0.5 * h * k1a) + force(t + 0.5 * h);
      const double k3a = s2 + 0.5 * h * k2b;
      const double k3b = -k * std::sin(s1 + 0.5 * h * k2a) + force(t + 0.5 * h);
      const double k4a = s2 + h * k3b;
      const double k4b = -k * std::sin(s1 + h * k3a) + force(t + h);
      s1 += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
      s2 += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
      t += h;
    }
    s1_out[i + 1] = s1;
  }
  return s1_out;
}

namespace {

// Thomas algorithm for a constant-coefficient tridiagonal system, in-place on
// the right-hand side.
class TridiagSolver {
 public:
  TridiagSolver(const Vector& lower, const Vector& diag, const Vector& upper)
      : lower_(lower), upper_(upper), denom_(diag.size()), scratch_(diag.size()) {
    const Index n = diag.size();
    Vector cp(n);
    denom_[0] = diag[0];
    if (denom_[0] == 0.0) throw NumericError("tridiagonal solve: singular system");
    cp[0] = upper[0] / denom_[0];
    for (Index i = 1; i < n; ++i) {
      denom_[i] = diag[i] - lower[i] * cp[i - 1];
      if (denom_[i] == 0.0) throw NumericError("tridiagonal solve: singular system");
      cp[i] = (i + 1 < n) ? upper[i] / denom_[i] : 0.0;
    }
    cprime_ = std::move(cp);
  }

  void solve(Vector& rhs) const {
    const Index n = denom_.size();
    scratch_[0] = rhs[0] / denom_[0];
    for (Index i = 1; i < n; ++i)
      scratch_[i] = (rhs[i] - lower_[i] * scratch_[i - 1]) / denom_[i];
    rhs[n - 1] = scratch_[n - 1];
    for (Index i = n - 2; i >= 0; --i) rhs[i] = scratch_[i] - cprime_[i] * rhs[i + 1];
  }

 private:
  Vector lower_, upper_, denom_, cprime_;
  mutable Vector scratch_;
};

Vector resample(const Eigen::Ref<const Vector>& src_grid, const Eigen::Ref<const Vector>& src,
                const Vector& dst_grid) {
  Vector out(dst_grid.size());
  for (Index i = 0; i < dst_grid.size(); ++i)
    out[i] = interp_linear(src_grid, src, dst_grid[i]);
  return out;
}

}  // namespace

SolutionField solve_diffusion_reaction(const Eigen::Ref<const Vector>& u_disc,
                                       const Eigen::Ref<const Vector>& u_grid, double diffusivity,
                                       double reaction_k, int nx, int nt, double t_final) {
  if (nx < 50 || nt < 50) throw ConfigError("diffusion_reaction: nx and nt must be >= 50");

  SolutionField field;
  field.x = Vector::LinSpaced(nx, 0.0, 1.0);
  field.t = Vector::LinSpaced(nt + 1, 0.0, t_final);
  field.values = Matrix::Zero(nx, nt + 1);

  const Vector u = resample(u_grid, u_disc, field.x);
  const double dt = t_final / nt;
  const double dx = 1.0 / (nx - 1);
  const double lambda = 0.5 * dt * diffusivity / (dx * dx);

  // interior unknowns i = 1..nx-2; boundaries stay exactly zero
  const Index ni = nx - 2;
  const Vector lower = Vector::Constant(ni, -lambda);
  const Vector diag = Vector::Constant(ni, 1.0 + 2.0 * lambda);
  const Vector upper = Vector::Constant(ni, -lambda);
  const TridiagSolver solver(lower, diag, upper);

  Vector s = Vector::Zero(nx);
  Vector rhs(ni);
  for (int j = 0; j < nt; ++j) {
    for (Index i = 1; i <= ni; ++i) {
      const double diffuse = lambda * (s[i - 1] - 2.0 * s[i] + s[i + 1]);
      const double source = dt * (reaction_k * s[i] * s[i] + u[i]);
      rhs[i - 1] = s[i] + diffuse + source;
    }
    solver.solve(rhs);
    s.segment(1, ni) = rhs;
    if (!s.allFinite() || s.cwiseAbs().maxCoeff() > 1e6)
      throw NumericError("diffusion_reaction: solution blew up; use a finer time grid (nt)");
    field.values.col(j + 1) = s;
  }
  return field;
}

SolutionField solve_advection_diffusion(const Eigen::Ref<const Vector>& u0_disc,
                                        const Eigen::Ref<const Vector>& u0_grid,
                                        double diffusivity, int nx, int nt, double t_final) {
  if (nx < 50 || nt < 50) throw ConfigError("advection_diffusion: nx and nt must be >= 50");

  SolutionField field;
  const double dx = 1.0 / nx;  // periodic grid, no duplicated endpoint
  field.x = Vector::LinSpaced(nx, 0.0, 1.0 - dx);
  field.t = Vector::LinSpaced(nt + 1, 0.0, t_final);
  field.values = Matrix::Zero(nx, nt + 1);

  Vector s = resample(u0_grid, u0_disc, field.x);
  field.values.col(0) = s;

  const double dt = t_final / nt;
  const double adv = -1.0 / (2.0 * dx);       // coefficient on s_{i+1} - s_{i-1}
  const double dif = diffusivity / (dx * dx);  // coefficient on the second difference
  // spatial operator A: row i = lo*s_{i-1} + di*s_i + up*s_{i+1} (periodic)
  const double a_lo = dif - adv;
  const double a_di = -2.0 * dif;
  const double a_up = dif + adv;

  // M = I - dt/2 A (cyclic tridiagonal), P = I + dt/2 A
  const double m_lo = -0.5 * dt * a_lo;
  const double m_di = 1.0 - 0.5 * dt * a_di;
  const double m_up = -0.5 * dt * a_up;

  // Sherman-Morrison splitting of the cyclic system
  const double gamma = -m_di;
  Vector diag = Vector::Constant(nx, m_di);
  diag[0] -= gamma;
  diag[nx - 1] -= m_up * m_lo / gamma;
  const Vector lower = Vector::Constant(nx, m_lo);
  const Vector upper = Vector::Constant(nx, m_up);
  const TridiagSolver solver(lower, diag, upper);

  Vector corr = Vector::Zero(nx);
  corr[0] = gamma;
  corr[nx - 1] = m_up;
  Vector z = corr;
  solver.solve(z);
  const double vz = z[0] + m_lo / gamma * z[nx - 1];

  Vector rhs(nx);
  for (int j = 0; j < nt; ++j) {
    for (Index i = 0; i < nx; ++i) {
      const double sm = s[(i + nx - 1) % nx];
      const double sp = s[(i + 1) % nx];
      rhs[i] = s[i] + 0.5 * dt * (a_lo * sm + a_di * s[i] + a_up * sp);
    }
    solver.solve(rhs);
    const double vy = rhs[0] + m_lo / gamma * rhs[nx - 1];
    rhs -= (vy / (1.0 + vz)) * z;
    s = rhs;
    if (!s.allFinite())
      throw NumericError("advection_diffusion: linear solve produced non-finite values");
    field.values.col(j + 1) = s;
  }
  return field;
}

}  // namespace bonet
