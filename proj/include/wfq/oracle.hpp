#pragma once

// Dense brute-force representation of trajectory functionals and of the
// action operator as an explicit matrix, for tiny grids. Ground truth for
// every factorized computation.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>

#include "wfq/action_operator.hpp"
#include "wfq/grid.hpp"
#include "wfq/wavefunctional.hpp"

namespace wfq {

inline constexpr long kTrajectoryTensorCap = 4096;

// Dense rank-(N+1) tensor over the full product grid, flattened with slice 0
// as the fastest-varying digit of the mixed-radix index.
struct TrajectoryTensor {
  int points = 0;   // M
  int slices = 0;   // N + 1
  CVector values;   // length M^(N+1)

  long size() const { return static_cast<long>(values.size()); }

  static long capacity_for(int points, int slices) {
    long total = 1;
    for (int n = 0; n < slices; ++n) {
      total *= points;
      if (total > kTrajectoryTensorCap)
        throw ValidationError("trajectory tensor exceeds the M^(N+1) <= 4096 cap");
    }
    return total;
  }

  std::vector<int> unpack(long index) const {
    std::vector<int> digits(slices);
    for (int n = 0; n < slices; ++n) {
      digits[n] = static_cast<int>(index % points);
      index /= points;
    }
    return digits;
  }

  long pack(const std::vector<int>& digits) const {
    long index = 0;
    for (int n = slices - 1; n >= 0; --n) index = index * points + digits[n];
    return index;
  }
};

// Per-index product quadrature weights for the (N+1)-fold integral.
inline RVector product_weights(const TrajectoryTensor& shape, const SpaceGrid& grid) {
  RVector w1(grid.points, grid.dx());
  if (grid.boundary == Boundary::Dirichlet) {
    w1.front() *= 0.5;
    w1.back() *= 0.5;
  }
  RVector w(shape.size(), 1.0);
  for (long idx = 0; idx < shape.size(); ++idx) {
    long rem = idx;
    for (int n = 0; n < shape.slices; ++n) {
      w[idx] *= w1[rem % shape.points];
      rem /= shape.points;
    }
  }
  return w;
}

inline Complex tensor_inner(const TrajectoryTensor& a, const TrajectoryTensor& b,
                            const SpaceGrid& grid) {
  RVector w = product_weights(a, grid);
  Complex acc{};
  for (long idx = 0; idx < a.size(); ++idx)
    acc += w[idx] * std::conj(a.values[idx]) * b.values[idx];
  return acc;
}

inline TrajectoryTensor embed(const MultiplicativeFunctional& psi,
                              const SpaceGrid& grid) {
  TrajectoryTensor t;
  t.points = grid.points;
  t.slices = static_cast<int>(psi.factors.size());
  long total = TrajectoryTensor::capacity_for(t.points, t.slices);
  t.values.resize(total);
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    Complex v{1.0, 0.0};
    for (int n = 0; n < t.slices; ++n) {
      v *= psi.factors[n].amps[rem % t.points];
      rem /= t.points;
    }
    t.values[idx] = v;
  }
  return t;
}

// The action operator as an explicit sparse matrix on the product grid:
//   Sum_{n<N} [ (hbar/i) dx_n D1_n + (eps hbar^2/2m) D2_n - eps U(x_{j_n}, t_n) ]
// where D1_n, D2_n act on slice digit j_n and dx_n = x_{j_{n+1}} - x_{j_n}
// is a diagonal coefficient read from the index tuple.
struct DenseOperator {
  int points = 0;
  int slices = 0;
  Eigen::SparseMatrix<Complex> matrix;

  TrajectoryTensor apply(const TrajectoryTensor& t) const {
    Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(
        t.values.data(), static_cast<long>(t.values.size()));
    Eigen::VectorXcd r = matrix * v;
    TrajectoryTensor out = t;
    for (long i = 0; i < r.size(); ++i) out.values[i] = r[i];
    return out;
  }
};

inline DenseOperator build_dense_action(const PotentialSpec& spec, const GridSet& g) {
  const SpaceGrid& grid = g.space;
  const int m = grid.points;
  const int n_steps = g.time.steps;
  const int slices = n_steps + 1;
  const long total = TrajectoryTensor::capacity_for(m, slices);
  const double eps = g.time.eps();
  const double hbar = g.params.hbar;
  const double kin = eps * hbar * hbar / (2.0 * g.params.mass);
  const double inv_dx = 1.0 / grid.dx();
  const bool periodic = grid.boundary == Boundary::Periodic;

  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(static_cast<std::size_t>(total) * (3 * n_steps + 1));

  std::vector<long> stride(slices);
  stride[0] = 1;
  for (int n = 1; n < slices; ++n) stride[n] = stride[n - 1] * m;

  for (long row = 0; row < total; ++row) {
    long rem = row;
    std::vector<int> js(slices);
    for (int n = 0; n < slices; ++n) {
      js[n] = static_cast<int>(rem % m);
      rem /= m;
    }
    Complex diag{};
    for (int n = 0; n < n_steps; ++n) {
      const int jn = js[n];
      const double dxn = grid.x(js[n + 1]) - grid.x(jn);
      const Complex vel = Complex{0.0, -hbar} * dxn;  // (hbar/i) dx_n
      // neighbours of digit j_n
      auto add = [&](int jj, Complex coeff) {
        if (periodic) {
          jj = grid.wrap(jj);
        } else if (jj < 0 || jj >= m) {
          return;  // Dirichlet: virtual amplitude is zero
        }
        long col = row + static_cast<long>(jj - jn) * stride[n];
        triplets.emplace_back(static_cast<int>(row), static_cast<int>(col), coeff);
      };
      add(jn + 1, vel * (0.5 * inv_dx) + kin * (inv_dx * inv_dx));
      add(jn - 1, vel * (-0.5 * inv_dx) + kin * (inv_dx * inv_dx));
      diag += kin * (-2.0 * inv_dx * inv_dx);
      diag -= eps * sample_potential(spec, grid.x(jn), g.time.t(n), g.params,
                                     &grid, &g.time);
    }
    triplets.emplace_back(static_cast<int>(row), static_cast<int>(row), diag);
  }

  DenseOperator op;
  op.points = m;
  op.slices = slices;
  op.matrix.resize(static_cast<int>(total), static_cast<int>(total));
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return op;
}

struct Spectrum {
  CVector eigenvalues;
  std::vector<TrajectoryTensor> eigenvectors;  // normalized in product quadrature
};

// Full spectrum of the (generally non-Hermitian) dense matrix.
inline Spectrum eigen_decompose(const DenseOperator& op, const SpaceGrid& grid,
                                bool want_vectors = true) {
  Eigen::MatrixXcd dense = Eigen::MatrixXcd(op.matrix);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(dense, want_vectors);
  if (solver.info() != Eigen::Success)
    throw NumericalError("dense action eigendecomposition failed");
  Spectrum s;
  const long total = dense.rows();
  s.eigenvalues.resize(total);
  for (long i = 0; i < total; ++i) s.eigenvalues[i] = solver.eigenvalues()(i);
  if (want_vectors) {
    s.eigenvectors.reserve(total);
    for (long i = 0; i < total; ++i) {
      TrajectoryTensor t;
      t.points = op.points;
      t.slices = op.slices;
      t.values.resize(total);
      for (long j = 0; j < total; ++j) t.values[j] = solver.eigenvectors()(j, i);
      double norm = std::sqrt(tensor_inner(t, t, grid).real());
      if (norm > 0.0)
        for (Complex& v : t.values) v /= norm;
      s.eigenvectors.push_back(std::move(t));
    }
  }
  return s;
}

// Rayleigh quotient and residual in the product quadrature inner product.
inline Complex rayleigh_quotient(const DenseOperator& op, const TrajectoryTensor& t,
                                 const SpaceGrid& grid) {
  TrajectoryTensor at = op.apply(t);
  return tensor_inner(t, at, grid) / tensor_inner(t, t, grid);
}

inline double eigen_residual(const DenseOperator& op, const TrajectoryTensor& t,
                             const SpaceGrid& grid) {
  TrajectoryTensor at = op.apply(t);
  Complex lambda = tensor_inner(t, at, grid) / tensor_inner(t, t, grid);
  for (long i = 0; i < t.size(); ++i) at.values[i] -= lambda * t.values[i];
  return std::sqrt(tensor_inner(at, at, grid).real() /
                   tensor_inner(t, t, grid).real());
}

}  // namespace wfq
