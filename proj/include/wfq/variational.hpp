#pragma once

// The quantum action principle as optimization: extremize the symmetrized
// expectation over a per-slice Gaussian family with the first slice frozen
// as the initial condition.

#include <Eigen/Dense>
#include <cmath>

#include "wfq/action_operator.hpp"
#include "wfq/grid.hpp"
#include "wfq/wavefunctional.hpp"

namespace wfq {

// Per slice n: center q_n, momentum k_n, log-width s_n, phase phi_n.
// Slice field: exp(-(x-q)^2 / 4 e^{2s} + i k (x-q)/hbar + i phi), normalized.
struct GaussianAnsatz {
  RVector q;
  RVector k;
  RVector s;
  RVector phi;

  int segments() const { return static_cast<int>(q.size()) - 1; }

  static GaussianAnsatz constant(int n_steps, double q0, double k0, double s0) {
    GaussianAnsatz a;
    a.q.assign(n_steps + 1, q0);
    a.k.assign(n_steps + 1, k0);
    a.s.assign(n_steps + 1, s0);
    a.phi.assign(n_steps + 1, 0.0);
    return a;
  }
};

inline void check_width_bounds(const GaussianAnsatz& a, const SpaceGrid& grid) {
  const double lo = grid.dx();
  const double hi = (grid.x_max - grid.x_min) / 6.0;
  for (double s : a.s) {
    double w = std::exp(s);
    if (!(w > lo) || !(w < hi))
      throw ValidationError("ansatz width " + std::to_string(w) +
                            " outside resolvable bounds (" + std::to_string(lo) +
                            ", " + std::to_string(hi) + ")");
  }
}

inline SliceState gaussian_slice(double q, double k, double s, double phi,
                                 double t, const SpaceGrid& grid, double hbar) {
  const double sig2 = std::exp(2.0 * s);
  CVector amps(grid.points);
  for (int j = 0; j < grid.points; ++j) {
    double x = grid.x(j);
    double arg = -(x - q) * (x - q) / (4.0 * sig2);
    double phase = k * (x - q) / hbar + phi;
    amps[j] = std::exp(arg) * Complex{std::cos(phase), std::sin(phase)};
  }
  return normalized(SliceState{std::move(amps), t}, grid);
}

inline MultiplicativeFunctional build_ansatz(const GaussianAnsatz& a,
                                             const GridSet& g) {
  if (a.segments() != g.time.steps)
    throw ValidationError("ansatz does not match the time grid");
  check_width_bounds(a, g.space);
  MultiplicativeFunctional psi;
  psi.factors.reserve(a.q.size());
  for (std::size_t n = 0; n < a.q.size(); ++n)
    psi.factors.push_back(gaussian_slice(a.q[n], a.k[n], a.s[n], a.phi[n],
                                         g.time.t(static_cast<int>(n)), g.space,
                                         g.params.hbar));
  return psi;
}

namespace detail {

// Slice-local integrals entering the symmetrized expectation. Caching them
// makes finite-difference gradients cheap: perturbing one slice only touches
// the two adjacent terms of the sum.
struct SliceIntegrals {
  Complex antisym;    // (1/2) int (conj(psi) psi' - conj(psi') psi)
  Complex x_antisym;  // same with an extra factor x
  double mu;          // int x |psi|^2
  double grad2;       // int |psi'|^2
  double pot;         // int U(x, t_n) |psi|^2
};

inline SliceIntegrals slice_integrals(const SliceState& slice,
                                      const PotentialSpec& spec, double t,
                                      const GridSet& g) {
  const SpaceGrid& grid = g.space;
  CVector d1 = first_derivative(slice.amps, grid);
  CVector anti(grid.points), x_anti(grid.points);
  RVector mu(grid.points), grad2(grid.points), pot(grid.points);
  for (int j = 0; j < grid.points; ++j) {
    double x = grid.x(j);
    Complex a = 0.5 * (std::conj(slice.amps[j]) * d1[j] -
                       std::conj(d1[j]) * slice.amps[j]);
    anti[j] = a;
    x_anti[j] = x * a;
    mu[j] = x * std::norm(slice.amps[j]);
    grad2[j] = std::norm(d1[j]);
    pot[j] = sample_potential(spec, x, t, g.params, &grid, &g.time) *
             std::norm(slice.amps[j]);
  }
  SliceIntegrals s;
  s.antisym = quadrature(anti, grid);
  s.x_antisym = quadrature(x_anti, grid);
  s.mu = quadrature(mu, grid);
  s.grad2 = quadrature(grad2, grid);
  s.pot = quadrature(pot, grid);
  return s;
}

struct LambdaEvaluator {
  const PotentialSpec* spec = nullptr;
  const GridSet* grids = nullptr;
  std::vector<SliceIntegrals> cache;

  void rebuild(const GaussianAnsatz& a) {
    cache.resize(a.q.size());
    for (std::size_t n = 0; n < a.q.size(); ++n) refresh(a, static_cast<int>(n));
  }

  void refresh(const GaussianAnsatz& a, int n) {
    SliceState s = gaussian_slice(a.q[n], a.k[n], a.s[n], a.phi[n],
                                  grids->time.t(n), grids->space,
                                  grids->params.hbar);
    cache[n] = slice_integrals(s, *spec, grids->time.t(n), *grids);
  }

  double value() const {
    const double eps = grids->time.eps();
    const double hbar = grids->params.hbar;
    const double kin = eps * hbar * hbar / (2.0 * grids->params.mass);
    Complex lambda{};
    const int n_steps = static_cast<int>(cache.size()) - 1;
    for (int n = 0; n < n_steps; ++n) {
      lambda += Complex{0.0, -hbar} *
                (cache[n + 1].mu * cache[n].antisym - cache[n].x_antisym);
      lambda += -kin * cache[n].grad2 - eps * cache[n].pot;
    }
    if (std::abs(lambda.imag()) > 1e-8)
      throw NumericalError("symmetrized expectation has imaginary residue " +
                           std::to_string(lambda.imag()));
    return lambda.real();
  }
};

}  // namespace detail

// Symmetrized expectation of the built functional; real part returned,
// imaginary residue checked below 1e-8.
inline double lambda_of(const GaussianAnsatz& a, const PotentialSpec& spec,
                        const GridSet& g) {
  if (a.segments() != g.time.steps)
    throw ValidationError("ansatz does not match the time grid");
  check_width_bounds(a, g.space);
  detail::LambdaEvaluator ev{&spec, &g, {}};
  ev.rebuild(a);
  return ev.value();
}

namespace detail {

// Parameter flattening order: q_0..q_N, k_0..k_N, s_0..s_N, phi_0..phi_N.
inline double* param_slot(GaussianAnsatz& a, int index) {
  const int count = static_cast<int>(a.q.size());
  int kind = index / count, n = index % count;
  switch (kind) {
    case 0: return &a.q[n];
    case 1: return &a.k[n];
    case 2: return &a.s[n];
    default: return &a.phi[n];
  }
}

inline int param_slice(const GaussianAnsatz& a, int index) {
  return index % static_cast<int>(a.q.size());
}

inline double fd_component(LambdaEvaluator& ev, GaussianAnsatz& a, int index,
                           double h, const SpaceGrid& grid) {
  double* slot = param_slot(a, index);
  const int n = param_slice(a, index);
  const double saved = *slot;
  auto probe = [&](double delta) {
    *slot = saved + delta;
    check_width_bounds(a, grid);
    ev.refresh(a, n);
    return ev.value();
  };
  double f_plus, f_minus;
  try {
    f_plus = probe(h);
    f_minus = probe(-h);
  } catch (const ValidationError&) {
    // width bound hit at a probe point: shrink the step once, then give up
    h *= 0.1;
    *slot = saved;
    ev.refresh(a, n);
    f_plus = probe(h);
    f_minus = probe(-h);
  }
  *slot = saved;
  ev.refresh(a, n);
  return (f_plus - f_minus) / (2.0 * h);
}

}  // namespace detail

// Central finite-difference gradient over all 4(N+1) parameters, step
// h = 1e-5 scaled per parameter. Deterministic.
inline RVector grad_lambda(const GaussianAnsatz& ansatz, const PotentialSpec& spec,
                           const GridSet& g) {
  GaussianAnsatz a = ansatz;
  check_width_bounds(a, g.space);
  detail::LambdaEvaluator ev{&spec, &g, {}};
  ev.rebuild(a);
  const int dim = 4 * static_cast<int>(a.q.size());
  RVector grad(dim);
  for (int i = 0; i < dim; ++i) {
    double scale = std::max(1.0, std::abs(*detail::param_slot(a, i)));
    grad[i] = detail::fd_component(ev, a, i, 1e-5 * scale, g.space);
  }
  return grad;
}

struct TraceStep {
  GaussianAnsatz params;
  double lambda = 0.0;
  double grad_norm = 0.0;
};

struct OptimizationTrace {
  std::vector<TraceStep> iterations;
  bool converged = false;
  double final_lambda = 0.0;
  GaussianAnsatz final_params;
};

namespace detail {

inline double max_norm_free(const RVector& grad, int count) {
  double m = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (static_cast<int>(i) % count == 0) continue;  // frozen first slice
    m = std::max(m, std::abs(grad[i]));
  }
  return m;
}

}  // namespace detail

// Quasi-Newton search for a stationary point of lambda over the free
// parameters (slices 1..N; the first slice encodes the initial condition and
// stays frozen). The Newton system uses a finite-difference Jacobian of the
// gradient with a truncated SVD solve: global phase and last-slice momentum
// and width are exact flat directions of the factorized expectation.
inline OptimizationTrace extremize_lambda(const GaussianAnsatz& initial,
                                          const PotentialSpec& spec,
                                          const GridSet& g, int max_iter = 500,
                                          double tol = 1e-7) {
  GaussianAnsatz a = initial;
  check_width_bounds(a, g.space);
  const int count = static_cast<int>(a.q.size());
  const int dim = 4 * count;

  std::vector<int> free_idx;
  for (int i = 0; i < dim; ++i)
    if (i % count != 0) free_idx.push_back(i);
  const int n_free = static_cast<int>(free_idx.size());

  detail::LambdaEvaluator ev{&spec, &g, {}};
  ev.rebuild(a);

  auto gradient = [&](GaussianAnsatz& point) {
    RVector grad(dim);
    for (int i = 0; i < dim; ++i) {
      double scale = std::max(1.0, std::abs(*detail::param_slot(point, i)));
      grad[i] = detail::fd_component(ev, point, i, 1e-5 * scale, g.space);
    }
    return grad;
  };

  OptimizationTrace trace;
  RVector grad = gradient(a);
  double gnorm = detail::max_norm_free(grad, count);
  trace.iterations.push_back({a, ev.value(), gnorm});

  for (int iter = 0; iter < max_iter && gnorm >= tol; ++iter) {
    // finite-difference Jacobian of the free gradient, column by column
    Eigen::MatrixXd jac(n_free, n_free);
    const double h = 1e-4;
    for (int c = 0; c < n_free; ++c) {
      int idx = free_idx[c];
      int n = detail::param_slice(a, idx);
      double* slot = detail::param_slot(a, idx);
      double saved = *slot;
      auto grad_at = [&](double delta) {
        *slot = saved + delta;
        ev.refresh(a, n);
        return gradient(a);
      };
      RVector gp = grad_at(h);
      RVector gm = grad_at(-h);
      *slot = saved;
      ev.refresh(a, n);
      for (int r = 0; r < n_free; ++r)
        jac(r, c) = (gp[free_idx[r]] - gm[free_idx[r]]) / (2.0 * h);
    }
    Eigen::VectorXd rhs(n_free);
    for (int r = 0; r < n_free; ++r) rhs(r) = grad[free_idx[r]];
    Eigen::BDCSVD<Eigen::MatrixXd> svd(jac,
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-8);
    Eigen::VectorXd step = svd.solve(rhs);

    // damped acceptance: the free-gradient max-norm must not increase
    double scale = 1.0;
    bool accepted = false;
    for (int back = 0; back < 30; ++back) {
      GaussianAnsatz candidate = a;
      for (int c = 0; c < n_free; ++c)
        *detail::param_slot(candidate, free_idx[c]) -= scale * step(c);
      try {
        check_width_bounds(candidate, g.space);
        ev.rebuild(candidate);
        RVector cg = gradient(candidate);
        double cnorm = detail::max_norm_free(cg, count);
        if (cnorm <= gnorm) {
          a = candidate;
          grad = std::move(cg);
          gnorm = cnorm;
          trace.iterations.push_back({a, ev.value(), gnorm});
          accepted = true;
          break;
        }
      } catch (const ValidationError&) {
        // width bound hit: shrink
      }
      scale *= 0.5;
    }
    if (!accepted) break;
  }

  ev.rebuild(a);
  trace.converged = gnorm < tol;
  trace.final_lambda = ev.value();
  trace.final_params = a;
  return trace;
}

}  // namespace wfq
