#pragma once

// Discrete classical mechanics: the canonical action on staggered paths,
// its analytic gradient, Newton extremization under fixed endpoints, and
// the non-simultaneous Poisson bracket.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>

#include "wfq/grid.hpp"

namespace wfq {

// Positions on nodes (x_0..x_N), momenta on intervals (p_0..p_{N-1}).
struct ClassicalPath {
  RVector x;
  RVector p;

  int segments() const { return static_cast<int>(p.size()); }
};

inline void require_valid(const ClassicalPath& path, const TimeGrid& time) {
  if (static_cast<int>(path.x.size()) != time.steps + 1 ||
      static_cast<int>(path.p.size()) != time.steps)
    throw ValidationError("classical path does not match the time grid");
}

// I = Sum_{n<N} eps [ p_n (dx_n / eps) - p_n^2 / 2m - U(x_n, t_n) ].
inline double classical_action(const ClassicalPath& path, const PotentialSpec& spec,
                               const GridSet& g) {
  require_valid(path, g.time);
  const double eps = g.time.eps();
  double action = 0.0;
  for (int n = 0; n < g.time.steps; ++n) {
    double dxn = path.x[n + 1] - path.x[n];
    double u = sample_potential(spec, path.x[n], g.time.t(n), g.params,
                                &g.space, &g.time);
    action += eps * (path.p[n] * dxn / eps -
                     path.p[n] * path.p[n] / (2.0 * g.params.mass) - u);
  }
  return action;
}

struct ActionGradient {
  RVector d_x;  // dI/dx_n, n = 0..N (endpoint components included)
  RVector d_p;  // dI/dp_n, n = 0..N-1
};

// Analytic partials of the discrete action.
inline ActionGradient action_gradient(const ClassicalPath& path,
                                      const PotentialSpec& spec, const GridSet& g) {
  require_valid(path, g.time);
  const int n_steps = g.time.steps;
  const double eps = g.time.eps();
  ActionGradient grad;
  grad.d_x.assign(n_steps + 1, 0.0);
  grad.d_p.assign(n_steps, 0.0);
  for (int n = 0; n < n_steps; ++n) {
    double dxn = path.x[n + 1] - path.x[n];
    grad.d_p[n] = dxn - eps * path.p[n] / g.params.mass;
    grad.d_x[n] -= path.p[n];
    grad.d_x[n + 1] += path.p[n];
    grad.d_x[n] -= eps * potential_slope(spec, path.x[n], g.time.t(n), g.params,
                                         &g.space, &g.time);
  }
  return grad;
}

// Newton iteration on the interior gradient components under fixed-endpoint
// boundary conditions; the unknowns are x_1..x_{N-1} and p_0..p_{N-1}.
// At the solution the discrete Hamilton equations hold:
//   dx_n / eps = p_n / m,   (p_n - p_{n-1}) / eps = -U'(x_n, t_n).
inline ClassicalPath extremize(double x_start, double x_end,
                               const PotentialSpec& spec, const GridSet& g,
                               const ClassicalPath& guess, int max_iter = 50,
                               double tol = 1e-10) {
  require_valid(guess, g.time);
  const int n_steps = g.time.steps;
  const double eps = g.time.eps();
  const double mass = g.params.mass;
  ClassicalPath path = guess;
  path.x.front() = x_start;
  path.x.back() = x_end;

  const int n_xi = n_steps - 1;  // interior positions
  const int dim = n_xi + n_steps;
  auto xi = [&](int n) { return n - 1; };          // x_n -> unknown index
  auto pi = [&](int n) { return n_xi + n; };       // p_n -> unknown index

  for (int iter = 0; iter < max_iter; ++iter) {
    ActionGradient grad = action_gradient(path, spec, g);
    Eigen::VectorXd residual(dim);
    for (int n = 1; n < n_steps; ++n) residual(xi(n)) = grad.d_x[n];
    for (int n = 0; n < n_steps; ++n) residual(pi(n)) = grad.d_p[n];
    if (residual.lpNorm<Eigen::Infinity>() < tol) return path;

    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(dim, dim);
    for (int n = 0; n < n_steps; ++n) {
      // d/d* of grad.d_p[n] = (x_{n+1} - x_n) - eps p_n / m
      if (n + 1 < n_steps + 1 && n + 1 >= 1 && n + 1 <= n_steps - 1)
        jac(pi(n), xi(n + 1)) += 1.0;
      if (n >= 1 && n <= n_steps - 1) jac(pi(n), xi(n)) -= 1.0;
      jac(pi(n), pi(n)) -= eps / mass;
    }
    for (int n = 1; n < n_steps; ++n) {
      // d/d* of grad.d_x[n] = p_{n-1} - p_n - eps U'(x_n, t_n)
      jac(xi(n), pi(n - 1)) += 1.0;
      jac(xi(n), pi(n)) -= 1.0;
      jac(xi(n), xi(n)) -=
          eps * potential_curvature(spec, path.x[n], g.time.t(n), g.params);
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (!lu.isInvertible() ||
        lu.rcond() < 1e-12)
      throw NumericalError(
          "singular Newton system in classical extremization (conjugate point?)");
    Eigen::VectorXd step = lu.solve(residual);
    for (int n = 1; n < n_steps; ++n) path.x[n] -= step(xi(n));
    for (int n = 0; n < n_steps; ++n) path.p[n] -= step(pi(n));
  }
  ActionGradient grad = action_gradient(path, spec, g);
  double res = 0.0;
  for (int n = 1; n < n_steps; ++n) res = std::max(res, std::abs(grad.d_x[n]));
  for (int n = 0; n < n_steps; ++n) res = std::max(res, std::abs(grad.d_p[n]));
  throw NumericalError("classical extremization did not converge; residual " +
                       std::to_string(res));
}

// Phase-space observable with analytic partials.
struct PhaseObservable {
  std::function<double(const ClassicalPath&)> value;
  std::function<double(const ClassicalPath&, int)> d_x;  // d/dx_n
  std::function<double(const ClassicalPath&, int)> d_p;  // d/dp_n
};

// Sparse multivariate polynomial over (x_0..x_N, p_0..p_{N-1}); exponent
// keys are (variable slot, power) lists. Supports the exact bracket algebra
// tests (antisymmetry, bilinearity, Leibniz).
struct PolyObservable {
  // term: coefficient plus exponents for each x and p slot
  struct Term {
    double coeff = 0.0;
    std::map<int, int> x_pow;
    std::map<int, int> p_pow;
  };
  std::vector<Term> terms;

  static PolyObservable constant(double c) { return {{Term{c, {}, {}}}}; }
  static PolyObservable coordinate(int n) { return {{Term{1.0, {{n, 1}}, {}}}}; }
  static PolyObservable momentum(int n) { return {{Term{1.0, {}, {{n, 1}}}}}; }

  double eval(const ClassicalPath& path) const {
    double acc = 0.0;
    for (const Term& t : terms) {
      double v = t.coeff;
      for (auto [n, k] : t.x_pow) v *= std::pow(path.x[n], k);
      for (auto [n, k] : t.p_pow) v *= std::pow(path.p[n], k);
      acc += v;
    }
    return acc;
  }

  PolyObservable d_x(int slot) const { return differentiate(slot, true); }
  PolyObservable d_p(int slot) const { return differentiate(slot, false); }

  PolyObservable operator+(const PolyObservable& other) const {
    PolyObservable out = *this;
    out.terms.insert(out.terms.end(), other.terms.begin(), other.terms.end());
    return out;
  }
  PolyObservable operator*(const PolyObservable& other) const {
    PolyObservable out;
    for (const Term& a : terms)
      for (const Term& b : other.terms) {
        Term t;
        t.coeff = a.coeff * b.coeff;
        t.x_pow = a.x_pow;
        t.p_pow = a.p_pow;
        for (auto [n, k] : b.x_pow) t.x_pow[n] += k;
        for (auto [n, k] : b.p_pow) t.p_pow[n] += k;
        out.terms.push_back(std::move(t));
      }
    return out;
  }
  PolyObservable scaled(double s) const {
    PolyObservable out = *this;
    for (Term& t : out.terms) t.coeff *= s;
    return out;
  }

  PhaseObservable as_observable() const {
    PolyObservable self = *this;
    return PhaseObservable{
        [self](const ClassicalPath& path) { return self.eval(path); },
        [self](const ClassicalPath& path, int n) { return self.d_x(n).eval(path); },
        [self](const ClassicalPath& path, int n) { return self.d_p(n).eval(path); }};
  }

 private:
  PolyObservable differentiate(int slot, bool wrt_x) const {
    PolyObservable out;
    for (const Term& t : terms) {
      const auto& pows = wrt_x ? t.x_pow : t.p_pow;
      auto it = pows.find(slot);
      if (it == pows.end() || it->second == 0) continue;
      Term d = t;
      d.coeff *= it->second;
      auto& dp = wrt_x ? d.x_pow : d.p_pow;
      if (--dp[slot] == 0) dp.erase(slot);
      out.terms.push_back(std::move(d));
    }
    return out;
  }
};

// The discrete action as a PhaseObservable, with partials from action_gradient.
inline PhaseObservable action_observable(const PotentialSpec& spec, const GridSet& g) {
  return PhaseObservable{
      [spec, g](const ClassicalPath& path) {
        return classical_action(path, spec, g);
      },
      [spec, g](const ClassicalPath& path, int n) {
        return action_gradient(path, spec, g).d_x[n];
      },
      [spec, g](const ClassicalPath& path, int n) {
        return action_gradient(path, spec, g).d_p[n];
      }};
}

// Sum_n (1/eps) [ dA/dx_n dB/dp_n - dA/dp_n dB/dx_n ]; the discrete bracket
// with {x_n, p_n'} = delta_{n n'} / eps.
inline double poisson_bracket(const PhaseObservable& a, const PhaseObservable& b,
                              const ClassicalPath& path, const GridSet& g) {
  require_valid(path, g.time);
  const double inv_eps = 1.0 / g.time.eps();
  double acc = 0.0;
  for (int n = 0; n < g.time.steps; ++n)
    acc += inv_eps * (a.d_x(path, n) * b.d_p(path, n) -
                      a.d_p(path, n) * b.d_x(path, n));
  return acc;
}

inline double poisson_bracket(const PolyObservable& a, const PolyObservable& b,
                              const ClassicalPath& path, const GridSet& g) {
  return poisson_bracket(a.as_observable(), b.as_observable(), path, g);
}

}  // namespace wfq
