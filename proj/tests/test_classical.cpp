#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "wfq/classical.hpp"

using namespace wfq;

namespace {

constexpr double kPi = 3.14159265358979323846;

GridSet grids(int n_steps, double total = 1.0) {
  return make_grids({-8.0, 8.0, 16, Boundary::Dirichlet}, {total, n_steps},
                    {1.0, 1.0});
}

ClassicalPath straight_line(double x0, double x1, const GridSet& g) {
  ClassicalPath path;
  path.x.resize(g.time.steps + 1);
  path.p.assign(g.time.steps,
                g.params.mass * (x1 - x0) / g.time.total);
  for (int n = 0; n <= g.time.steps; ++n)
    path.x[n] = x0 + (x1 - x0) * g.time.t(n) / g.time.total;
  return path;
}

ClassicalPath random_path(const GridSet& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ClassicalPath path;
  path.x.resize(g.time.steps + 1);
  path.p.resize(g.time.steps);
  for (double& x : path.x) x = unit(rng);
  for (double& p : path.p) p = unit(rng);
  return path;
}

}  // namespace

TEST_CASE("free straight-line action is m/(2T)", "[classical]") {
  GridSet g = grids(10);
  ClassicalPath path = straight_line(0.0, 1.0, g);
  CHECK(classical_action(path, PotentialSpec::free(), g) ==
        Catch::Approx(0.5).margin(1e-12));
  ClassicalPath rest = straight_line(0.0, 0.0, g);
  CHECK(classical_action(rest, PotentialSpec::free(), g) ==
        Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("harmonic action approaches its closed form under refinement",
          "[classical]") {
  // quarter period: x(t) = cos t, p(t) = -sin t, T = pi/2; the Lagrangian is
  // -cos(2t)/2, whose integral over [0, pi/2] vanishes. The left-Riemann
  // potential term limits the sum to first-order accuracy.
  auto deviation = [](int n_steps) {
    GridSet g = grids(n_steps, kPi / 2.0);
    ClassicalPath path;
    path.x.resize(n_steps + 1);
    path.p.resize(n_steps);
    for (int n = 0; n <= n_steps; ++n) path.x[n] = std::cos(g.time.t(n));
    for (int n = 0; n < n_steps; ++n)
      path.p[n] = -std::sin(g.time.t(n) + 0.5 * g.time.eps());
    return std::abs(classical_action(path, PotentialSpec::harmonic(1.0), g));
  };
  CHECK(deviation(32) / deviation(64) >= 1.8);
  CHECK(deviation(64) / deviation(128) >= 1.8);
}

TEST_CASE("action_gradient matches finite differences on random paths",
          "[classical]") {
  GridSet g = grids(6);
  PotentialSpec spec = PotentialSpec::quartic(0.3);
  ClassicalPath path = random_path(g, 5);
  ActionGradient grad = action_gradient(path, spec, g);
  const double h = 1e-6;
  for (int n = 0; n <= g.time.steps; ++n) {
    ClassicalPath up = path, down = path;
    up.x[n] += h;
    down.x[n] -= h;
    double fd = (classical_action(up, spec, g) -
                 classical_action(down, spec, g)) /
                (2 * h);
    CHECK(grad.d_x[n] == Catch::Approx(fd).margin(1e-8));
  }
  for (int n = 0; n < g.time.steps; ++n) {
    ClassicalPath up = path, down = path;
    up.p[n] += h;
    down.p[n] -= h;
    double fd = (classical_action(up, spec, g) -
                 classical_action(down, spec, g)) /
                (2 * h);
    CHECK(grad.d_p[n] == Catch::Approx(fd).margin(1e-8));
  }
}

TEST_CASE("the straight free path is an exact discrete extremum", "[classical]") {
  GridSet g = grids(8);
  ClassicalPath path = straight_line(-0.3, 0.9, g);
  ActionGradient grad = action_gradient(path, PotentialSpec::free(), g);
  for (int n = 1; n < g.time.steps; ++n)
    CHECK(std::abs(grad.d_x[n]) < 1e-14);
  for (int n = 0; n < g.time.steps; ++n)
    CHECK(std::abs(grad.d_p[n]) < 1e-14);
}

TEST_CASE("extremize recovers the free straight line exactly", "[classical]") {
  GridSet g = grids(16);
  ClassicalPath guess = random_path(g, 9);
  guess.x.front() = 0.0;
  guess.x.back() = 1.0;
  ClassicalPath path = extremize(0.0, 1.0, PotentialSpec::free(), g, guess);
  for (int n = 0; n <= g.time.steps; ++n)
    CHECK(path.x[n] == Catch::Approx(g.time.t(n)).margin(1e-12));
  for (int n = 0; n < g.time.steps; ++n)
    CHECK(path.p[n] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("harmonic extremization converges to the cosine at second order",
          "[classical]") {
  auto deviation = [](int n_steps) {
    GridSet g = grids(n_steps);
    double x0 = 0.8, x1 = 0.8 * std::cos(1.0);
    ClassicalPath guess = straight_line(x0, x1, g);
    ClassicalPath path =
        extremize(x0, x1, PotentialSpec::harmonic(1.0), g, guess);
    double worst = 0.0;
    for (int n = 0; n <= n_steps; ++n)
      worst = std::max(worst,
                       std::abs(path.x[n] - 0.8 * std::cos(g.time.t(n))));
    return worst;
  };
  double d16 = deviation(16), d32 = deviation(32), d64 = deviation(64);
  CHECK(d16 / d32 >= 3.5);
  CHECK(d32 / d64 >= 3.5);
}

TEST_CASE("the discrete conjugate point makes the Newton system singular",
          "[classical]") {
  // For N = 2 the interior Jacobian determinant is eps (2 - eps^2 omega^2),
  // which vanishes at T = 2 sqrt(2) / omega — the discrete analogue of the
  // half-period focal point at T = pi.
  GridSet g = grids(2, 2.0 * std::sqrt(2.0));
  ClassicalPath guess = straight_line(0.5, 0.3, g);
  CHECK_THROWS_AS(extremize(0.5, 0.3, PotentialSpec::harmonic(1.0), g, guess),
                  NumericalError);
}

TEST_CASE("coordinate brackets reproduce the discrete delta", "[classical]") {
  GridSet g = grids(8);
  ClassicalPath path = random_path(g, 3);
  const double inv_eps = 1.0 / g.time.eps();
  CHECK(poisson_bracket(PolyObservable::coordinate(3),
                        PolyObservable::momentum(3), path, g) ==
        Catch::Approx(inv_eps));
  CHECK(poisson_bracket(PolyObservable::coordinate(3),
                        PolyObservable::momentum(5), path, g) ==
        Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("the bracket is antisymmetric, bilinear and Leibniz", "[classical]") {
  GridSet g = grids(6);
  ClassicalPath path = random_path(g, 17);
  PolyObservable a = PolyObservable::coordinate(1) *
                         PolyObservable::momentum(2) +
                     PolyObservable::constant(0.5);
  PolyObservable b =
      PolyObservable::momentum(1) * PolyObservable::momentum(1) +
      PolyObservable::coordinate(4);
  PolyObservable c = PolyObservable::coordinate(2);

  double ab = poisson_bracket(a, b, path, g);
  CHECK(poisson_bracket(b, a, path, g) == Catch::Approx(-ab));

  PolyObservable combo = a.scaled(2.0) + c.scaled(-0.7);
  CHECK(poisson_bracket(combo, b, path, g) ==
        Catch::Approx(2.0 * ab - 0.7 * poisson_bracket(c, b, path, g)));

  // {a, b*c} = {a, b} c + b {a, c}
  double lhs = poisson_bracket(a, b * c, path, g);
  double rhs = ab * c.eval(path) + b.eval(path) * poisson_bracket(a, c, path, g);
  CHECK(lhs == Catch::Approx(rhs).margin(1e-10));
}

TEST_CASE("coordinate and momentum brackets with the action vanish at the "
          "extremum",
          "[classical]") {
  GridSet g = grids(16);
  double x0 = 0.6, x1 = 0.6 * std::cos(1.0);
  ClassicalPath path = extremize(x0, x1, PotentialSpec::harmonic(1.0), g,
                                 straight_line(x0, x1, g));
  PhaseObservable action = action_observable(PotentialSpec::harmonic(1.0), g);
  const double bound = 1e-8 / g.time.eps();
  for (int n = 1; n < g.time.steps; ++n) {
    CHECK(std::abs(poisson_bracket(
              PolyObservable::coordinate(n).as_observable(), action, path, g)) <
          bound);
    CHECK(std::abs(poisson_bracket(
              PolyObservable::momentum(n).as_observable(), action, path, g)) <
          bound);
  }
  // {x_n, I} = dI/dp_n / eps by construction
  ClassicalPath off = straight_line(x0, x1 + 0.2, g);
  ActionGradient grad = action_gradient(off, PotentialSpec::harmonic(1.0), g);
  CHECK(poisson_bracket(PolyObservable::coordinate(4).as_observable(), action,
                        off, g) ==
        Catch::Approx(grad.d_p[4] / g.time.eps()).margin(1e-12));
}

TEST_CASE("discrete Hamilton residuals vanish at the extremum", "[classical]") {
  GridSet g = grids(24);
  double x0 = 0.5, x1 = 0.5 * std::cos(1.0);
  ClassicalPath path = extremize(x0, x1, PotentialSpec::harmonic(1.0), g,
                                 straight_line(x0, x1, g));
  for (int n = 0; n < g.time.steps; ++n)
    CHECK(std::abs((path.x[n + 1] - path.x[n]) / g.time.eps() -
                   path.p[n] / g.params.mass) < 1e-10);
}
