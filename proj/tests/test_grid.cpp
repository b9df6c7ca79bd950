#include <catch_amalgamated.hpp>

#include <random>

#include "wfq/grid.hpp"

using namespace wfq;

TEST_CASE("make_grids derives eps and hbar_tilde", "[grid]") {
  GridSet g = make_grids({-1.0, 1.0, 3, Boundary::Dirichlet}, {1.0, 10},
                         {1.0, 1.0});
  CHECK(g.time.eps() == Catch::Approx(0.1));
  CHECK(g.params.hbar_tilde == Catch::Approx(0.1));
  CHECK(g.space.dx() == Catch::Approx(1.0));
}

TEST_CASE("make_grids validates its inputs", "[grid]") {
  CHECK_THROWS_AS(make_grids({-1, 1, 2, Boundary::Dirichlet}, {1, 10}, {1, 1}),
                  ValidationError);
  CHECK_THROWS_AS(make_grids({-1, 1, 8, Boundary::Dirichlet}, {1, 1}, {1, 1}),
                  ValidationError);
  CHECK_THROWS_AS(make_grids({1, -1, 8, Boundary::Dirichlet}, {1, 10}, {1, 1}),
                  ValidationError);
  CHECK_THROWS_AS(make_grids({-1, 1, 8, Boundary::Dirichlet}, {-1, 10}, {1, 1}),
                  ValidationError);
  CHECK_THROWS_AS(make_grids({-1, 1, 8, Boundary::Dirichlet}, {1, 10}, {0, 1}),
                  ValidationError);
  CHECK_THROWS_AS(make_grids({-1, 1, 8, Boundary::Dirichlet}, {1, 10}, {1, 0}),
                  ValidationError);
}

TEST_CASE("periodic grids use dx = L / M and wrap indices", "[grid]") {
  SpaceGrid grid{0.0, 1.0, 4, Boundary::Periodic};
  CHECK(grid.dx() == Catch::Approx(0.25));
  CHECK(grid.wrap(-1) == 3);
  CHECK(grid.wrap(4) == 0);
}

TEST_CASE("sample_potential evaluates each closed-form kind", "[grid]") {
  PhysicalParams params{1.0, 1.0, 0.1};
  CHECK(sample_potential(PotentialSpec::free(), 1.7, 0.3, params) == 0.0);
  CHECK(sample_potential(PotentialSpec::harmonic(1.0), 2.0, 0.0, params) ==
        Catch::Approx(2.0));
  CHECK(sample_potential(PotentialSpec::time_linear(1.0), 3.0, 2.0, params) ==
        Catch::Approx(6.0));
  CHECK(sample_potential(PotentialSpec::quartic(2.0), 1.0, 0.0, params) ==
        Catch::Approx(2.0));
  CHECK_THROWS_AS(PotentialSpec::harmonic(0.0), ValidationError);
}

TEST_CASE("tabulated potentials read back exactly and reject off-grid",
          "[grid]") {
  GridSet g = make_grids({0.0, 1.0, 3, Boundary::Dirichlet}, {1.0, 2}, {1, 1});
  RVector values = {0, 1, 2, 3, 4, 5, 6, 7, 8};  // 3 slices x 3 points
  PotentialSpec spec = PotentialSpec::tabulated(3, 3, values);
  CHECK(sample_potential(spec, g.space.x(1), g.time.t(1), g.params, &g.space,
                         &g.time) == Catch::Approx(4.0));
  CHECK_THROWS_AS(sample_potential(spec, 0.25, 0.0, g.params, &g.space, &g.time),
                  ValidationError);
  CHECK_THROWS_AS(PotentialSpec::tabulated(3, 3, RVector(8, 0.0)),
                  ValidationError);
}

TEST_CASE("potential_slope and curvature match finite differences", "[grid]") {
  PhysicalParams params{1.3, 1.0, 0.1};
  auto specs = {PotentialSpec::harmonic(0.7), PotentialSpec::quartic(0.4),
                PotentialSpec::time_linear(1.2)};
  for (const PotentialSpec& spec : specs) {
    for (double x : {-1.5, 0.2, 2.0}) {
      double h = 1e-6;
      double fd = (sample_potential(spec, x + h, 0.5, params) -
                   sample_potential(spec, x - h, 0.5, params)) /
                  (2 * h);
      CHECK(potential_slope(spec, x, 0.5, params) == Catch::Approx(fd).margin(1e-6));
    }
  }
  CHECK(potential_curvature(PotentialSpec::harmonic(2.0), 0.3, 0.0, params) ==
        Catch::Approx(1.3 * 4.0));
  CHECK(potential_curvature(PotentialSpec::quartic(1.0), 2.0, 0.0, params) ==
        Catch::Approx(48.0));
}

TEST_CASE("quadrature is exact for constants on both boundary types", "[grid]") {
  SpaceGrid dirichlet{0.0, 1.0, 11, Boundary::Dirichlet};
  CHECK(quadrature(RVector(11, 1.0), dirichlet) == Catch::Approx(1.0));
  SpaceGrid periodic{0.0, 3.0, 12, Boundary::Periodic};
  CHECK(quadrature(RVector(12, 1.0), periodic) == Catch::Approx(3.0));
  CHECK_THROWS_AS(quadrature(RVector(5, 1.0), dirichlet), ValidationError);
}

TEST_CASE("quadrature integrates x on [0,1]", "[grid]") {
  SpaceGrid grid{0.0, 1.0, 101, Boundary::Dirichlet};
  RVector f(101);
  for (int j = 0; j < 101; ++j) f[j] = grid.x(j);
  CHECK(quadrature(f, grid) == Catch::Approx(0.5).margin(1e-4));
}

TEST_CASE("quadrature is linear and nonnegative on nonnegative fields",
          "[grid]") {
  SpaceGrid grid{-1.0, 2.0, 37, Boundary::Dirichlet};
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RVector f(37), h(37), combo(37);
  for (int j = 0; j < 37; ++j) {
    f[j] = unit(rng);
    h[j] = unit(rng);
    combo[j] = 2.5 * f[j] - 0.75 * h[j];
  }
  CHECK(quadrature(combo, grid) ==
        Catch::Approx(2.5 * quadrature(f, grid) - 0.75 * quadrature(h, grid)));
  CHECK(quadrature(f, grid) >= 0.0);
}

TEST_CASE("quadrature converges at second order on smooth integrands",
          "[grid]") {
  // x^4 on [0, 1], exact integral 1/5
  auto error_at = [](int m) {
    SpaceGrid grid{0.0, 1.0, m, Boundary::Dirichlet};
    RVector f(m);
    for (int j = 0; j < m; ++j) f[j] = std::pow(grid.x(j), 4);
    return std::abs(quadrature(f, grid) - 0.2);
  };
  CHECK(error_at(33) / error_at(65) >= 3.0);
  CHECK(error_at(65) / error_at(129) >= 3.0);
}
