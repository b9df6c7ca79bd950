#pragma once

// Per-slice wave-function oracle: Crank-Nicolson propagation of the
// Schrodinger equation and the discretized Schrodinger action.

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "wfq/grid.hpp"

namespace wfq {

// Normalized complex amplitude vector on the space grid at one time slice.
struct SliceState {
  CVector amps;
  double t = 0.0;
};

inline double slice_norm(const SliceState& s, const SpaceGrid& grid) {
  return quadrature(abs2(s.amps), grid);
}

inline SliceState normalized(SliceState s, const SpaceGrid& grid) {
  double n = std::sqrt(slice_norm(s, grid));
  if (!(n > 0.0)) throw NumericalError("cannot normalize a zero state");
  for (Complex& a : s.amps) a /= n;
  return s;
}

// Ordered collection of N+1 slices, slice n at time t_n.
struct WaveHistory {
  std::vector<SliceState> slices;

  int segments() const { return static_cast<int>(slices.size()) - 1; }
};

// Central three-point stencils with boundary handling per grid.boundary.
inline CVector second_derivative(const CVector& amps, const SpaceGrid& grid) {
  const int m = grid.points;
  if (static_cast<int>(amps.size()) != m)
    throw ValidationError("second_derivative: state does not match grid");
  const double inv = 1.0 / (grid.dx() * grid.dx());
  CVector out(m);
  auto at = [&](int j) -> Complex {
    if (grid.boundary == Boundary::Periodic) return amps[grid.wrap(j)];
    return (j < 0 || j >= m) ? Complex{} : amps[j];
  };
  for (int j = 0; j < m; ++j)
    out[j] = (at(j + 1) - 2.0 * amps[j] + at(j - 1)) * inv;
  return out;
}

inline CVector second_derivative(const SliceState& s, const SpaceGrid& grid) {
  return second_derivative(s.amps, grid);
}

inline CVector first_derivative(const CVector& amps, const SpaceGrid& grid) {
  const int m = grid.points;
  if (static_cast<int>(amps.size()) != m)
    throw ValidationError("first_derivative: state does not match grid");
  const double inv = 1.0 / (2.0 * grid.dx());
  CVector out(m);
  auto at = [&](int j) -> Complex {
    if (grid.boundary == Boundary::Periodic) return amps[grid.wrap(j)];
    return (j < 0 || j >= m) ? Complex{} : amps[j];
  };
  for (int j = 0; j < m; ++j) out[j] = (at(j + 1) - at(j - 1)) * inv;
  return out;
}

inline CVector apply_hamiltonian(const CVector& amps, const SpaceGrid& grid,
                                 const PotentialSpec& spec, double t,
                                 const PhysicalParams& params,
                                 const TimeGrid* time = nullptr) {
  CVector out = second_derivative(amps, grid);
  const double kin = -params.hbar * params.hbar / (2.0 * params.mass);
  for (int j = 0; j < grid.points; ++j)
    out[j] = kin * out[j] +
             sample_potential(spec, grid.x(j), t, params, &grid, time) * amps[j];
  return out;
}

namespace detail {

// Thomas solve of a tridiagonal system; the periodic corner entries are
// folded in with Sherman-Morrison.
inline CVector solve_tridiagonal(CVector diag, CVector lower, CVector upper,
                                 CVector rhs, bool periodic) {
  const int m = static_cast<int>(diag.size());
  auto thomas = [&](CVector d, CVector r) -> CVector {
    for (int j = 1; j < m; ++j) {
      if (std::abs(d[j - 1]) < 1e-300)
        throw NumericalError("singular tridiagonal system in Crank-Nicolson step");
      Complex w = lower[j] / d[j - 1];
      d[j] -= w * upper[j - 1];
      r[j] -= w * r[j - 1];
    }
    if (std::abs(d[m - 1]) < 1e-300)
      throw NumericalError("singular tridiagonal system in Crank-Nicolson step");
    CVector x(m);
    x[m - 1] = r[m - 1] / d[m - 1];
    for (int j = m - 2; j >= 0; --j) x[j] = (r[j] - upper[j] * x[j + 1]) / d[j];
    return x;
  };

  if (!periodic) return thomas(std::move(diag), std::move(rhs));

  // corner entries: A[0][m-1] = lower[0], A[m-1][0] = upper[m-1]
  const Complex a = lower[0], b = upper[m - 1];
  const Complex gamma = -diag[0];
  CVector d = diag;
  d[0] -= gamma;
  d[m - 1] -= a * b / gamma;
  CVector u(m, Complex{});
  u[0] = gamma;
  u[m - 1] = b;
  CVector y = thomas(d, std::move(rhs));
  CVector q = thomas(d, std::move(u));
  Complex vy = y[0] + (a / gamma) * y[m - 1];
  Complex vq = q[0] + (a / gamma) * q[m - 1];
  Complex factor = vy / (1.0 + vq);
  CVector x(m);
  for (int j = 0; j < m; ++j) x[j] = y[j] - factor * q[j];
  return x;
}

}  // namespace detail

// One Crank-Nicolson step of size eps:
//   (1 + i eps H / 2 hbar) psi+ = (1 - i eps H / 2 hbar) psi
// with the potential evaluated at the interval midpoint t + eps/2.
inline SliceState cn_step(const SliceState& state, double t,
                          const PotentialSpec& spec, const GridSet& g) {
  const SpaceGrid& grid = g.space;
  const double eps = g.time.eps();
  const int m = grid.points;
  const bool periodic = grid.boundary == Boundary::Periodic;
  const Complex alpha{0.0, eps / (2.0 * g.params.hbar)};
  const double kin = -g.params.hbar * g.params.hbar /
                     (2.0 * g.params.mass * grid.dx() * grid.dx());
  const double tm = t + 0.5 * eps;

  CVector diag(m), lower(m), upper(m), rhs(m);
  for (int j = 0; j < m; ++j) {
    double u = sample_potential(spec, grid.x(j), tm, g.params, &grid, &g.time);
    Complex h_diag = -2.0 * kin + u;
    diag[j] = 1.0 + alpha * h_diag;
    lower[j] = alpha * kin;
    upper[j] = alpha * kin;
  }
  // rhs = (1 - alpha H) psi
  auto at = [&](int j) -> Complex {
    if (periodic) return state.amps[grid.wrap(j)];
    return (j < 0 || j >= m) ? Complex{} : state.amps[j];
  };
  for (int j = 0; j < m; ++j) {
    double u = sample_potential(spec, grid.x(j), tm, g.params, &grid, &g.time);
    Complex h = kin * (at(j + 1) + at(j - 1)) + (-2.0 * kin + u) * state.amps[j];
    rhs[j] = state.amps[j] - alpha * h;
  }
  SliceState out;
  out.amps = detail::solve_tridiagonal(std::move(diag), std::move(lower),
                                       std::move(upper), std::move(rhs), periodic);
  out.t = t + eps;
  return out;
}

// N applications of cn_step; slice n holds the state at t_n.
inline WaveHistory evolve(const SliceState& initial, const PotentialSpec& spec,
                          const GridSet& g) {
  WaveHistory h;
  h.slices.reserve(g.time.steps + 1);
  h.slices.push_back(initial);
  h.slices.front().t = 0.0;
  for (int n = 0; n < g.time.steps; ++n)
    h.slices.push_back(cn_step(h.slices.back(), g.time.t(n), spec, g));
  return h;
}

// Discrete Schrodinger action: left Riemann sum over n = 0..N-1 with the
// forward time difference for psi-dot and the central stencil for psi'.
inline double schrodinger_action(const WaveHistory& history,
                                 const PotentialSpec& spec, const GridSet& g) {
  const int n_steps = g.time.steps;
  if (history.segments() != n_steps)
    throw ValidationError("history does not match the time grid");
  const SpaceGrid& grid = g.space;
  const double eps = g.time.eps();
  const double hbar = g.params.hbar;
  const double kin = hbar * hbar / (2.0 * g.params.mass);

  Complex action{};
  for (int n = 0; n < n_steps; ++n) {
    const CVector& psi = history.slices[n].amps;
    const CVector& next = history.slices[n + 1].amps;
    CVector dpsi = first_derivative(psi, grid);
    CVector integrand(grid.points);
    double tn = g.time.t(n);
    for (int j = 0; j < grid.points; ++j) {
      Complex psidot = (next[j] - psi[j]) / eps;
      Complex phase = Complex{0.0, 0.5 * hbar} *
                      (std::conj(psi[j]) * psidot - std::conj(psidot) * psi[j]);
      double u = sample_potential(spec, grid.x(j), tn, g.params, &grid, &g.time);
      integrand[j] = phase - kin * std::norm(dpsi[j]) - u * std::norm(psi[j]);
    }
    action += eps * quadrature(integrand, grid);
  }
  if (std::abs(action.imag()) > 1e-10)
    throw NumericalError("schrodinger_action: imaginary residue " +
                         std::to_string(action.imag()) +
                         " signals an inconsistent history");
  return action.real();
}

// Dense eigen-decomposition of the discrete Hamiltonian at time t. Used by
// tests and experiments to build stationary slices; k = 0 is the ground state.
inline std::pair<double, CVector> discrete_eigenstate(const GridSet& g,
                                                      const PotentialSpec& spec,
                                                      double t, int k) {
  const SpaceGrid& grid = g.space;
  const int m = grid.points;
  const double kin = -g.params.hbar * g.params.hbar /
                     (2.0 * g.params.mass * grid.dx() * grid.dx());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
  for (int j = 0; j < m; ++j) {
    h(j, j) = -2.0 * kin + sample_potential(spec, grid.x(j), t, g.params, &grid, &g.time);
    if (j + 1 < m) {
      h(j, j + 1) = kin;
      h(j + 1, j) = kin;
    }
  }
  if (grid.boundary == Boundary::Periodic) {
    h(0, m - 1) += kin;
    h(m - 1, 0) += kin;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success)
    throw NumericalError("discrete Hamiltonian eigensolve failed");
  CVector vec(m);
  for (int j = 0; j < m; ++j) vec[j] = solver.eigenvectors()(j, k);
  SliceState s{std::move(vec), t};
  s = normalized(std::move(s), grid);
  return {solver.eigenvalues()(k), std::move(s.amps)};
}

}  // namespace wfq
