#pragma once

// Multiplicative wave functionals over broken-line trajectories: evaluation,
// normalization, the per-slice variational derivative and both sides of the
// back-shift identity.

#include <cmath>

#include "wfq/grid.hpp"
#include "wfq/schrodinger.hpp"

namespace wfq {

// Real trajectory sample (x_0, ..., x_N); the argument of a wave functional.
struct BrokenLine {
  RVector vertices;

  int segments() const { return static_cast<int>(vertices.size()) - 1; }
};

// Ordered collection of N+1 slice fields realizing Psi = prod_n psi_n(x_n).
struct MultiplicativeFunctional {
  std::vector<SliceState> factors;

  int segments() const { return static_cast<int>(factors.size()) - 1; }

  static MultiplicativeFunctional from_history(const WaveHistory& h) {
    return {h.slices};
  }
};

// Linear interpolation of a grid field at x; exact at grid points.
inline Complex interpolate(const CVector& amps, double x, const SpaceGrid& grid) {
  const int m = grid.points;
  if (x < grid.x_min - 1e-12 || x > grid.x_max + 1e-12)
    throw ValidationError("vertex " + std::to_string(x) + " lies outside the grid");
  double jf = (x - grid.x_min) / grid.dx();
  int j = static_cast<int>(std::floor(jf));
  double w = jf - j;
  if (grid.boundary == Boundary::Periodic) {
    int j0 = grid.wrap(j);
    int j1 = grid.wrap(j + 1);
    return (1.0 - w) * amps[j0] + w * amps[j1];
  }
  if (j >= m - 1) return amps[m - 1];
  if (j < 0) return amps[0];
  return (1.0 - w) * amps[j] + w * amps[j + 1];
}

namespace detail {

// prefix[n] = prod_{n' < n} psi_{n'}(x_{n'}), suffix[n] = prod_{n' > n}.
// Keeps products of all-but-one factor well defined when a factor is zero.
struct FactorProducts {
  CVector values;   // psi_n(x_n)
  CVector prefix;
  CVector suffix;

  Complex all() const { return prefix.back() * values.back(); }
  Complex all_but(int n) const { return prefix[n] * suffix[n]; }
};

inline FactorProducts factor_products(const MultiplicativeFunctional& psi,
                                      const BrokenLine& line,
                                      const SpaceGrid& grid) {
  const int count = static_cast<int>(psi.factors.size());
  FactorProducts fp;
  fp.values.resize(count);
  fp.prefix.resize(count);
  fp.suffix.resize(count);
  for (int n = 0; n < count; ++n)
    fp.values[n] = interpolate(psi.factors[n].amps, line.vertices[n], grid);
  Complex acc{1.0, 0.0};
  for (int n = 0; n < count; ++n) {
    fp.prefix[n] = acc;
    acc *= fp.values[n];
  }
  acc = Complex{1.0, 0.0};
  for (int n = count - 1; n >= 0; --n) {
    fp.suffix[n] = acc;
    acc *= fp.values[n];
  }
  return fp;
}

inline void require_matching(const MultiplicativeFunctional& psi,
                             const BrokenLine& line) {
  if (psi.factors.size() != line.vertices.size())
    throw ValidationError("functional and broken line disagree on N");
}

}  // namespace detail

inline Complex evaluate(const MultiplicativeFunctional& psi,
                        const BrokenLine& line, const SpaceGrid& grid) {
  detail::require_matching(psi, line);
  return detail::factor_products(psi, line, grid).all();
}

// (Psi, Psi) = prod_n quadrature(|psi_n|^2).
inline double functional_norm(const MultiplicativeFunctional& psi,
                              const SpaceGrid& grid) {
  double prod = 1.0;
  for (const SliceState& s : psi.factors) prod *= slice_norm(s, grid);
  return prod;
}

// (1/eps) psi'_n(x_n) prod_{n' != n} psi_{n'}(x_{n'}).
inline Complex variational_derivative(const MultiplicativeFunctional& psi,
                                      const BrokenLine& line, int n,
                                      const GridSet& g) {
  detail::require_matching(psi, line);
  if (n < 0 || n > psi.segments())
    throw ValidationError("slice index " + std::to_string(n) + " out of range");
  auto fp = detail::factor_products(psi, line, g.space);
  CVector d = first_derivative(psi.factors[n].amps, g.space);
  return interpolate(d, line.vertices[n], g.space) * fp.all_but(n) / g.time.eps();
}

// Sum_{n<N} dx_n (1/eps) psi'_n(x_n) prod_{n' != n}, with dx_n = x_{n+1}-x_n.
inline Complex backshift_lhs(const MultiplicativeFunctional& psi,
                             const BrokenLine& line, const GridSet& g) {
  detail::require_matching(psi, line);
  auto fp = detail::factor_products(psi, line, g.space);
  const double eps = g.time.eps();
  Complex sum{};
  for (int n = 0; n < psi.segments(); ++n) {
    double dxn = line.vertices[n + 1] - line.vertices[n];
    if (dxn == 0.0) continue;
    CVector d = first_derivative(psi.factors[n].amps, g.space);
    sum += dxn / eps * interpolate(d, line.vertices[n], g.space) * fp.all_but(n);
  }
  return sum;
}

// -Sum_{n<N} psidot(x_n, t_n) prod_{n' != n}, psidot the forward difference.
inline Complex backshift_rhs(const WaveHistory& history, const BrokenLine& line,
                             const GridSet& g) {
  if (history.slices.size() != line.vertices.size())
    throw ValidationError("history and broken line disagree on N");
  auto psi = MultiplicativeFunctional::from_history(history);
  auto fp = detail::factor_products(psi, line, g.space);
  const double eps = g.time.eps();
  Complex sum{};
  for (int n = 0; n < history.segments(); ++n) {
    CVector dot(g.space.points);
    for (int j = 0; j < g.space.points; ++j)
      dot[j] = (history.slices[n + 1].amps[j] - history.slices[n].amps[j]) / eps;
    sum -= interpolate(dot, line.vertices[n], g.space) * fp.all_but(n);
  }
  return sum;
}

}  // namespace wfq
