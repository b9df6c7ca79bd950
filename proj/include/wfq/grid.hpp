#pragma once

// Discretization substrate: uniform space/time grids, physical constants
// and the potential family shared by every other component.

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace wfq {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;
using RVector = std::vector<double>;

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Boundary { Dirichlet, Periodic };

// Uniform spatial grid on [x_min, x_max]. Dirichlet grids treat amplitudes
// at virtual points outside the interval as zero; periodic grids wrap
// indices modulo M (x_max then plays the role of x_min + M*dx).
struct SpaceGrid {
  double x_min = 0.0;
  double x_max = 0.0;
  int points = 0;  // M
  Boundary boundary = Boundary::Dirichlet;

  double dx() const {
    return boundary == Boundary::Dirichlet
               ? (x_max - x_min) / static_cast<double>(points - 1)
               : (x_max - x_min) / static_cast<double>(points);
  }
  double x(int j) const { return x_min + j * dx(); }
  int wrap(int j) const {
    int m = j % points;
    return m < 0 ? m + points : m;
  }
};

// Uniform division of [0, T] into N subintervals of length eps = T/N.
struct TimeGrid {
  double total = 0.0;  // T
  int steps = 0;       // N

  double eps() const { return total / static_cast<double>(steps); }
  double t(int n) const { return n * eps(); }
};

struct PhysicalParams {
  double mass = 1.0;
  double hbar = 1.0;
  double hbar_tilde = 0.0;  // eps * hbar, fixed by make_grids
};

// Closed potential family plus a tabulated escape hatch. Tabulated values
// are laid out slice-major: values[n * M + j] = U(x_j, t_n).
struct PotentialSpec {
  struct Free {};
  struct Harmonic {
    double omega = 1.0;
  };
  struct Quartic {
    double a = 1.0;
  };
  struct Tabulated {
    int points = 0;
    int slices = 0;  // N + 1
    RVector values;
  };
  struct TimeLinearCoupling {
    double g = 1.0;
  };

  std::variant<Free, Harmonic, Quartic, Tabulated, TimeLinearCoupling> kind =
      Free{};

  static PotentialSpec free() { return {Free{}}; }
  static PotentialSpec harmonic(double omega) {
    if (omega <= 0.0) throw ValidationError("harmonic potential requires omega > 0");
    return {Harmonic{omega}};
  }
  static PotentialSpec quartic(double a) { return {Quartic{a}}; }
  static PotentialSpec time_linear(double g) { return {TimeLinearCoupling{g}}; }
  static PotentialSpec tabulated(int points, int slices, RVector values) {
    if (static_cast<int>(values.size()) != points * slices)
      throw ValidationError("tabulated potential size does not match grid dimensions");
    return {Tabulated{points, slices, std::move(values)}};
  }
};

struct GridSet {
  SpaceGrid space;
  TimeGrid time;
  PhysicalParams params;
};

struct SpaceConfig {
  double x_min = -8.0;
  double x_max = 8.0;
  int points = 256;
  Boundary boundary = Boundary::Dirichlet;
};

struct TimeConfig {
  double total = 1.0;
  int steps = 16;
};

struct PhysicsConfig {
  double mass = 1.0;
  double hbar = 1.0;
};

inline GridSet make_grids(const SpaceConfig& sc, const TimeConfig& tc,
                          const PhysicsConfig& pc) {
  if (sc.points < 3)
    throw ValidationError("space grid requires at least 3 points, got " +
                          std::to_string(sc.points));
  if (!(sc.x_min < sc.x_max))
    throw ValidationError("space grid requires x_min < x_max");
  if (tc.steps < 2)
    throw ValidationError("time grid requires at least 2 subintervals, got " +
                          std::to_string(tc.steps));
  if (!(tc.total > 0.0)) throw ValidationError("total time must be positive");
  if (!(pc.mass > 0.0)) throw ValidationError("mass must be positive");
  if (!(pc.hbar > 0.0)) throw ValidationError("hbar must be positive");

  GridSet g;
  g.space = SpaceGrid{sc.x_min, sc.x_max, sc.points, sc.boundary};
  g.time = TimeGrid{tc.total, tc.steps};
  g.params = PhysicalParams{pc.mass, pc.hbar, g.time.eps() * pc.hbar};
  if (!(g.space.dx() > 0.0)) throw ValidationError("space grid spacing must be positive");
  return g;
}

inline double sample_potential(const PotentialSpec& spec, double x, double t,
                               const PhysicalParams& params,
                               const SpaceGrid* grid = nullptr,
                               const TimeGrid* time = nullptr) {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PotentialSpec::Free>) {
          return 0.0;
        } else if constexpr (std::is_same_v<K, PotentialSpec::Harmonic>) {
          return 0.5 * params.mass * k.omega * k.omega * x * x;
        } else if constexpr (std::is_same_v<K, PotentialSpec::Quartic>) {
          return k.a * x * x * x * x;
        } else if constexpr (std::is_same_v<K, PotentialSpec::TimeLinearCoupling>) {
          return k.g * x * t;
        } else {
          if (grid == nullptr || time == nullptr)
            throw ValidationError("tabulated potential needs grid context");
          double jf = (x - grid->x_min) / grid->dx();
          int j = static_cast<int>(std::lround(jf));
          double nf = t / time->eps();
          int n = static_cast<int>(std::lround(nf));
          if (j < 0 || j >= k.points || std::abs(jf - j) > 1e-9 * (1.0 + std::abs(jf)) ||
              n < 0 || n >= k.slices || std::abs(nf - n) > 1e-9 * (1.0 + std::abs(nf)))
            throw ValidationError("tabulated potential queried off-grid");
          return k.values[static_cast<std::size_t>(n) * k.points + j];
        }
      },
      spec.kind);
}

// dU/dx. Closed-form kinds differentiate analytically; tabulated falls back
// to the grid central difference.
inline double potential_slope(const PotentialSpec& spec, double x, double t,
                              const PhysicalParams& params,
                              const SpaceGrid* grid = nullptr,
                              const TimeGrid* time = nullptr) {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PotentialSpec::Free>) {
          return 0.0;
        } else if constexpr (std::is_same_v<K, PotentialSpec::Harmonic>) {
          return params.mass * k.omega * k.omega * x;
        } else if constexpr (std::is_same_v<K, PotentialSpec::Quartic>) {
          return 4.0 * k.a * x * x * x;
        } else if constexpr (std::is_same_v<K, PotentialSpec::TimeLinearCoupling>) {
          return k.g * t;
        } else {
          if (grid == nullptr || time == nullptr)
            throw ValidationError("tabulated potential needs grid context");
          double h = grid->dx();
          double lo = std::max(x - h, grid->x_min);
          double hi = std::min(x + h, grid->x_max);
          return (sample_potential(spec, hi, t, params, grid, time) -
                  sample_potential(spec, lo, t, params, grid, time)) /
                 (hi - lo);
        }
      },
      spec.kind);
}

inline double potential_curvature(const PotentialSpec& spec, double x, double t,
                                  const PhysicalParams& params) {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, PotentialSpec::Harmonic>) {
          return params.mass * k.omega * k.omega;
        } else if constexpr (std::is_same_v<K, PotentialSpec::Quartic>) {
          return 12.0 * k.a * x * x;
        } else {
          (void)x;
          (void)t;
          return 0.0;
        }
      },
      spec.kind);
}

// Riemann sum for periodic grids, trapezoidal rule for Dirichlet.
template <typename T>
inline T quadrature(std::span<const T> values, const SpaceGrid& grid) {
  if (static_cast<int>(values.size()) != grid.points)
    throw ValidationError("quadrature sample count does not match grid");
  T sum{};
  for (const T& v : values) sum += v;
  if (grid.boundary == Boundary::Dirichlet)
    sum -= 0.5 * (values.front() + values.back());
  return sum * grid.dx();
}

template <typename T>
inline T quadrature(const std::vector<T>& values, const SpaceGrid& grid) {
  return quadrature(std::span<const T>(values), grid);
}

inline RVector abs2(const CVector& v) {
  RVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::norm(v[i]);
  return out;
}

}  // namespace wfq
