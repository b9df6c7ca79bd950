#pragma once

// The discretized quantum action operator: momentum application, the action
// operator applied at a broken line, raw and symmetrized expectations, and
// the exact canonical commutator check on polynomial functionals.

#include <cmath>
#include <optional>

#include "wfq/grid.hpp"
#include "wfq/schrodinger.hpp"
#include "wfq/wavefunctional.hpp"

namespace wfq {

enum class ExpectationForm { Raw, Symmetrized };

struct ActionExpectation {
  Complex lambda;
  Complex velocity_term;
  Complex kinetic_term;
  Complex potential_term;
  ExpectationForm form = ExpectationForm::Raw;
  double eps = 0.0;
  int time_steps = 0;
  int space_points = 0;
};

// (hbar_tilde / i) * variational derivative; the eps factors cancel, leaving
// the slice-local prefactor hbar / i.
inline Complex momentum_apply(const MultiplicativeFunctional& psi,
                              const BrokenLine& line, int n, const GridSet& g) {
  return Complex{0.0, -g.params.hbar_tilde} *
         variational_derivative(psi, line, n, g);
}

// Discretized action operator applied to Psi, evaluated at the broken line:
//   Sum_{n<N} [ (hbar/i) dx_n psi'_n + (eps hbar^2/2m) psi''_n
//               - eps U(x_n, t_n) psi_n ] prod_{n' != n} psi_{n'}.
inline Complex apply_action(const MultiplicativeFunctional& psi,
                            const BrokenLine& line, const PotentialSpec& spec,
                            const GridSet& g) {
  detail::require_matching(psi, line);
  auto fp = detail::factor_products(psi, line, g.space);
  const double eps = g.time.eps();
  const double hbar = g.params.hbar;
  const double kin = eps * hbar * hbar / (2.0 * g.params.mass);
  Complex sum{};
  for (int n = 0; n < psi.segments(); ++n) {
    const CVector& amps = psi.factors[n].amps;
    double xn = line.vertices[n];
    double dxn = line.vertices[n + 1] - xn;
    Complex d1 = interpolate(first_derivative(amps, g.space), xn, g.space);
    Complex d2 = interpolate(second_derivative(amps, g.space), xn, g.space);
    double u = sample_potential(spec, xn, g.time.t(n), g.params, &g.space, &g.time);
    Complex local = Complex{0.0, -hbar} * dxn * d1 + kin * d2 - eps * u * fp.values[n];
    sum += local * fp.all_but(n);
  }
  return sum;
}

// lambda = (Psi, I Psi) in closed factorized form. The velocity term
// integrates dx_n = x_{n+1} - x_n against the product measure with every
// other slice integrating to one (see docs/expectation.md for the
// derivation):
//   Raw:         (hbar/i) [ mu_{n+1} A_n - B_n ],
//     mu_{n+1} = int x |psi_{n+1}|^2,  A_n = int conj(psi_n) psi'_n,
//     B_n = int x conj(psi_n) psi'_n;
//   Symmetrized: A_n, B_n replaced by (1/2) int (conj(psi) psi' - conj(psi') psi).
inline ActionExpectation expectation(const MultiplicativeFunctional& psi,
                                     const PotentialSpec& spec,
                                     ExpectationForm form, const GridSet& g) {
  const SpaceGrid& grid = g.space;
  const double eps = g.time.eps();
  const double hbar = g.params.hbar;
  const int n_steps = psi.segments();
  if (n_steps != g.time.steps)
    throw ValidationError("functional does not match the time grid");
  for (const SliceState& s : psi.factors)
    if (std::abs(slice_norm(s, grid) - 1.0) > 1e-6)
      throw ValidationError("expectation requires normalized factors");

  ActionExpectation out;
  out.form = form;
  out.eps = eps;
  out.time_steps = n_steps;
  out.space_points = grid.points;

  for (int n = 0; n < n_steps; ++n) {
    const CVector& amps = psi.factors[n].amps;
    const CVector& next = psi.factors[n + 1].amps;
    CVector d1 = first_derivative(amps, grid);

    CVector a_int(grid.points), b_int(grid.points), mu_int(grid.points);
    CVector kin_int(grid.points), pot_int(grid.points);
    double tn = g.time.t(n);
    for (int j = 0; j < grid.points; ++j) {
      double x = grid.x(j);
      Complex cd = std::conj(amps[j]) * d1[j];
      Complex anti = 0.5 * (cd - std::conj(d1[j]) * amps[j]);
      Complex pair = form == ExpectationForm::Raw ? cd : anti;
      a_int[j] = pair;
      b_int[j] = x * pair;
      mu_int[j] = x * std::norm(next[j]);
      double u = sample_potential(spec, x, tn, g.params, &grid, &g.time);
      pot_int[j] = u * std::norm(amps[j]);
      kin_int[j] = std::norm(d1[j]);
    }
    Complex mu = quadrature(mu_int, grid);
    Complex a = quadrature(a_int, grid);
    Complex b = quadrature(b_int, grid);
    out.velocity_term += Complex{0.0, -hbar} * (mu * a - b);
    if (form == ExpectationForm::Raw) {
      CVector d2 = second_derivative(amps, grid);
      CVector raw_kin(grid.points);
      for (int j = 0; j < grid.points; ++j)
        raw_kin[j] = std::conj(amps[j]) * d2[j];
      out.kinetic_term +=
          eps * hbar * hbar / (2.0 * g.params.mass) * quadrature(raw_kin, grid);
    } else {
      out.kinetic_term += -eps * hbar * hbar / (2.0 * g.params.mass) *
                          quadrature(kin_int, grid);
    }
    out.potential_term += -eps * quadrature(pot_int, grid);
  }
  out.lambda = out.velocity_term + out.kinetic_term + out.potential_term;
  return out;
}

inline ActionExpectation expectation(const WaveHistory& history,
                                     const PotentialSpec& spec,
                                     ExpectationForm form, const GridSet& g) {
  return expectation(MultiplicativeFunctional::from_history(history), spec, form, g);
}

// ---------------------------------------------------------------------------
// Canonical commutator on polynomial functionals, by analytic differentiation.

// Single-variable polynomial with complex coefficients, coeffs[k] * x^k.
struct Polynomial {
  CVector coeffs;

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  Complex eval(double x) const {
    Complex acc{};
    for (int k = degree(); k >= 0; --k) acc = acc * x + coeffs[k];
    return acc;
  }
  Polynomial derivative() const {
    if (coeffs.size() <= 1) return Polynomial{{Complex{}}};
    CVector d(coeffs.size() - 1);
    for (std::size_t k = 1; k < coeffs.size(); ++k)
      d[k - 1] = static_cast<double>(k) * coeffs[k];
    return Polynomial{std::move(d)};
  }
  Polynomial times_x() const {
    CVector c(coeffs.size() + 1, Complex{});
    for (std::size_t k = 0; k < coeffs.size(); ++k) c[k + 1] = coeffs[k];
    return Polynomial{std::move(c)};
  }
  Polynomial scaled(Complex s) const {
    CVector c = coeffs;
    for (Complex& v : c) v *= s;
    return Polynomial{std::move(c)};
  }
  Polynomial minus(const Polynomial& other) const {
    CVector c(std::max(coeffs.size(), other.coeffs.size()), Complex{});
    for (std::size_t k = 0; k < coeffs.size(); ++k) c[k] += coeffs[k];
    for (std::size_t k = 0; k < other.coeffs.size(); ++k) c[k] -= other.coeffs[k];
    return Polynomial{std::move(c)};
  }
};

// Product functional F = prod_n P_n(x_n) with polynomial slice factors.
struct PolynomialFunctional {
  std::vector<Polynomial> factors;

  Complex eval(const BrokenLine& line) const {
    Complex acc{1.0, 0.0};
    for (std::size_t n = 0; n < factors.size(); ++n)
      acc *= factors[n].eval(line.vertices[n]);
    return acc;
  }
};

struct CommutatorReport {
  int n = 0;
  int n_prime = 0;
  Complex measured;
  Complex expected;
  double abs_error = 0.0;
};

// Applies x_hat(t_n) p_hat(t_n') - p_hat(t_n') x_hat(t_n) to F analytically
// and compares with i hbar delta_{n n'} F at the sample lines. p_hat acts as
// (hbar/i) d/dx_{n'} on the polynomial factor (the 1/eps of the variational
// derivative cancels against hbar_tilde = eps hbar).
inline CommutatorReport commutator_check(const PolynomialFunctional& f, int n,
                                         int n_prime,
                                         const std::vector<BrokenLine>& samples,
                                         const GridSet& g) {
  const int count = static_cast<int>(f.factors.size());
  if (n < 0 || n >= count || n_prime < 0 || n_prime >= count)
    throw ValidationError("commutator slice index out of range");
  const Complex p_factor{0.0, -g.params.hbar};  // hbar / i

  // x_hat p_hat F
  PolynomialFunctional xp = f;
  xp.factors[n_prime] = xp.factors[n_prime].derivative().scaled(p_factor);
  xp.factors[n] = xp.factors[n].times_x();

  // p_hat x_hat F
  PolynomialFunctional px = f;
  px.factors[n] = px.factors[n].times_x();
  px.factors[n_prime] = px.factors[n_prime].derivative().scaled(p_factor);

  CommutatorReport report;
  report.n = n;
  report.n_prime = n_prime;
  report.expected = n == n_prime ? Complex{0.0, g.params.hbar} : Complex{};

  bool have_measured = false;
  for (const BrokenLine& line : samples) {
    Complex base = f.eval(line);
    Complex comm = xp.eval(line) - px.eval(line);
    report.abs_error =
        std::max(report.abs_error, std::abs(comm - report.expected * base));
    if (!have_measured && std::abs(base) > 1e-12) {
      report.measured = comm / base;
      have_measured = true;
    }
  }
  return report;
}

}  // namespace wfq
