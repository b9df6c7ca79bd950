#pragma once

// Named experiments behind the CLI: each consumes a validated
// ExperimentConfig, produces CSV tables plus a JSON report, and evaluates
// its pass/fail checks. Everything here is deterministic given the config.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "wfq/action_operator.hpp"
#include "wfq/classical.hpp"
#include "wfq/config.hpp"
#include "wfq/grid.hpp"
#include "wfq/oracle.hpp"
#include "wfq/schrodinger.hpp"
#include "wfq/variational.hpp"
#include "wfq/wavefunctional.hpp"

namespace wfq {

inline constexpr const char* kReportSchemaVersion = "1";
inline constexpr const char* kCodeVersion = "wfq 0.1.0";

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string note;
};

struct CsvTable {
  std::string name;  // file stem, e.g. "sweep"
  std::vector<std::string> columns;
  std::vector<RVector> rows;
};

struct RunReport {
  ExperimentConfig cfg;
  nlohmann::json metrics;
  std::vector<CheckResult> checks;
  std::vector<CsvTable> tables;
  double wall_seconds = 0.0;

  bool passed() const {
    for (const CheckResult& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

// --- convergence-order fitting -------------------------------------------

struct OrderFit {
  double order = 0.0;
  bool exact = false;     // metric identically zero
  bool monotone = true;   // metric decreasing across the sweep
  RVector ratios;         // metric[i] / metric[i+1]
};

inline OrderFit fit_order(const RVector& eps, const RVector& metric) {
  if (eps.size() != metric.size() || eps.size() < 3)
    throw ValidationError("order fit needs >= 3 sweep points");
  OrderFit fit;
  bool all_zero = true;
  for (double m : metric) {
    if (m < 0.0) throw ValidationError("order fit requires non-negative metrics");
    if (m != 0.0) all_zero = false;
  }
  if (all_zero) {
    fit.exact = true;
    return fit;
  }
  for (std::size_t i = 0; i + 1 < metric.size(); ++i) {
    fit.ratios.push_back(metric[i + 1] > 0.0 ? metric[i] / metric[i + 1] : 0.0);
    if (metric[i + 1] >= metric[i]) fit.monotone = false;
  }
  // least-squares slope of log(metric) vs log(eps)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (metric[i] <= 0.0) continue;  // exact points carry no slope information
    double lx = std::log(eps[i]), ly = std::log(metric[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) {
    fit.order = 0.0;
    fit.monotone = false;
    return fit;
  }
  fit.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

// --- shared state builders ------------------------------------------------

inline SliceState coherent_initial(const InitialState& init, const GridSet& g) {
  return gaussian_slice(init.q0, init.k0, std::log(init.sigma), 0.0, 0.0,
                        g.space, g.params.hbar);
}

inline GridSet grids_with_steps(const ExperimentConfig& cfg, int steps) {
  TimeConfig tc = cfg.time;
  tc.steps = steps;
  return make_grids(cfg.space, tc, cfg.physics);
}

namespace detail {

inline double mean_x(const CVector& amps, const SpaceGrid& grid) {
  RVector f(grid.points);
  for (int j = 0; j < grid.points; ++j) f[j] = grid.x(j) * std::norm(amps[j]);
  return quadrature(f, grid);
}

inline double mean_p(const CVector& amps, const SpaceGrid& grid, double hbar) {
  CVector d = first_derivative(amps, grid);
  CVector f(grid.points);
  for (int j = 0; j < grid.points; ++j)
    f[j] = Complex{0.0, -hbar} * std::conj(amps[j]) * d[j];
  return quadrature(f, grid).real();
}

inline double mean_energy(const CVector& amps, const SpaceGrid& grid,
                          const PotentialSpec& spec, double t,
                          const PhysicalParams& params, const TimeGrid& time) {
  CVector h = apply_hamiltonian(amps, grid, spec, t, params, &time);
  CVector f(grid.points);
  for (int j = 0; j < grid.points; ++j) f[j] = std::conj(amps[j]) * h[j];
  return quadrature(f, grid).real();
}

// smooth deterministic broken lines confined to the middle of the grid
inline std::vector<BrokenLine> sample_lines(const GridSet& g, int count,
                                            unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double span = 0.25 * (g.space.x_max - g.space.x_min);
  const double mid = 0.5 * (g.space.x_max + g.space.x_min);
  std::vector<BrokenLine> lines;
  lines.reserve(count);
  for (int l = 0; l < count; ++l) {
    double c0 = unit(rng), c1 = unit(rng), c2 = unit(rng);
    BrokenLine line;
    line.vertices.resize(g.time.steps + 1);
    for (int n = 0; n <= g.time.steps; ++n) {
      double tau = g.time.t(n) / g.time.total;
      line.vertices[n] =
          mid + span * (0.5 * c0 + 0.3 * c1 * tau +
                        0.4 * c2 * std::sin(3.14159265358979 * tau));
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

// run a function over sweep indices with a bounded worker pool; results land
// at their own index, so ordering is deterministic
template <typename F>
inline void parallel_for(int count, int workers, F&& body) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (std::thread& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

// --- per-experiment metric kernels (shared with the convergence study) ----

// relative deviation |lambda_sym - I_S| / max(1, |I_S|) for the evolved
// coherent state at the given step count
inline double action_equivalence_metric(const ExperimentConfig& cfg, int steps,
                                        double* lambda_out = nullptr,
                                        double* action_out = nullptr,
                                        double* lambda_raw_out = nullptr) {
  GridSet g = grids_with_steps(cfg, steps);
  WaveHistory h = evolve(coherent_initial(cfg.initial, g), cfg.potential, g);
  double i_s = schrodinger_action(h, cfg.potential, g);
  ActionExpectation sym =
      expectation(h, cfg.potential, ExpectationForm::Symmetrized, g);
  if (lambda_out) *lambda_out = sym.lambda.real();
  if (action_out) *action_out = i_s;
  if (lambda_raw_out)
    *lambda_raw_out =
        expectation(h, cfg.potential, ExpectationForm::Raw, g).lambda.real();
  return std::abs(sym.lambda.real() - i_s) / std::max(1.0, std::abs(i_s));
}

// max |lhs - rhs| of the back-shift identity over deterministic sample lines
inline double backshift_metric(const ExperimentConfig& cfg, int steps,
                               int line_count = 8) {
  GridSet g = grids_with_steps(cfg, steps);
  WaveHistory h = evolve(coherent_initial(cfg.initial, g), cfg.potential, g);
  auto psi = MultiplicativeFunctional::from_history(h);
  double worst = 0.0;
  for (const BrokenLine& line : detail::sample_lines(g, line_count, 20240u)) {
    Complex lhs = backshift_lhs(psi, line, g);
    Complex rhs = backshift_rhs(h, line, g);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

// max per-step energy drift of the Crank-Nicolson propagation
inline double energy_drift_metric(const ExperimentConfig& cfg, int steps) {
  GridSet g = grids_with_steps(cfg, steps);
  WaveHistory h = evolve(coherent_initial(cfg.initial, g), cfg.potential, g);
  double e0 = detail::mean_energy(h.slices.front().amps, g.space, cfg.potential,
                                  0.0, g.params, g.time);
  double worst = 0.0;
  for (const SliceState& s : h.slices)
    worst = std::max(worst, std::abs(detail::mean_energy(s.amps, g.space,
                                                         cfg.potential, s.t,
                                                         g.params, g.time) -
                                     e0));
  return worst;
}

// --- experiments ----------------------------------------------------------

inline RunReport run_evolve(const ExperimentConfig& cfg) {
  RunReport report;
  report.cfg = cfg;
  GridSet g = make_grids(cfg.space, cfg.time, cfg.physics);
  WaveHistory h = evolve(coherent_initial(cfg.initial, g), cfg.potential, g);

  CsvTable table{"slices", {"n", "t", "norm", "energy", "mean_x", "mean_p"}, {}};
  double e0 = detail::mean_energy(h.slices.front().amps, g.space, cfg.potential,
                                  0.0, g.params, g.time);
  double norm_drift = 0.0, energy_drift = 0.0;
  for (int n = 0; n <= g.time.steps; ++n) {
    const SliceState& s = h.slices[n];
    double norm = slice_norm(s, g.space);
    double energy = detail::mean_energy(s.amps, g.space, cfg.potential, s.t,
                                        g.params, g.time);
    norm_drift = std::max(norm_drift, std::abs(norm - 1.0));
    energy_drift = std::max(energy_drift, std::abs(energy - e0));
    table.rows.push_back({static_cast<double>(n), s.t, norm, energy,
                          detail::mean_x(s.amps, g.space),
                          detail::mean_p(s.amps, g.space, g.params.hbar)});
  }
  report.tables.push_back(std::move(table));
  report.metrics["norm_drift"] = norm_drift;
  report.metrics["energy_drift"] = energy_drift;
  report.metrics["schrodinger_action"] = schrodinger_action(h, cfg.potential, g);

  double tol = tolerance_or(cfg, "norm_drift", 1e-12);
  report.checks.push_back({"norm_drift", norm_drift < tol * g.time.steps,
                           norm_drift, tol * g.time.steps,
                           "max |norm - 1| over the history"});
  return report;
}

inline RunReport run_action_equivalence(const ExperimentConfig& cfg) {
  RunReport report;
  report.cfg = cfg;
  std::vector<int> steps =
      cfg.sweep && !cfg.sweep->steps.empty() ? cfg.sweep->steps
                                             : std::vector<int>{cfg.time.steps};

  CsvTable table{"sweep",
                 {"steps", "eps", "lambda_sym", "lambda_raw", "i_s", "abs_dev",
                  "rel_dev"},
                 std::vector<RVector>(steps.size())};
  RVector eps(steps.size()), rel(steps.size());
  detail::parallel_for(static_cast<int>(steps.size()), cfg.workers, [&](int i) {
    double lam = 0, act = 0, raw = 0;
    rel[i] = action_equivalence_metric(cfg, steps[i], &lam, &act, &raw);
    eps[i] = cfg.time.total / steps[i];
    table.rows[i] = {static_cast<double>(steps[i]), eps[i], lam,   raw,
                     act,                           std::abs(lam - act), rel[i]};
  });
  report.tables.push_back(std::move(table));
  report.metrics["final_rel_dev"] = rel.back();

  if (steps.size() >= 3) {
    OrderFit fit = fit_order(eps, rel);
    report.metrics["fitted_order"] = fit.exact ? std::string("exact")
                                               : std::to_string(fit.order);
    report.metrics["monotone"] = fit.monotone;
    double min_order = tolerance_or(cfg, "min_order", 1.0);
    report.checks.push_back(
        {"equivalence_order", fit.exact || fit.order >= min_order,
         fit.exact ? std::numeric_limits<double>::infinity() : fit.order,
         min_order,
         "fitted convergence order of |lambda_sym - I_S| / max(1, |I_S|)"});
  }
  return report;
}

inline RunReport run_backshift(const ExperimentConfig& cfg) {
  RunReport report;
  report.cfg = cfg;
  std::vector<int> steps =
      cfg.sweep && !cfg.sweep->steps.empty() ? cfg.sweep->steps
                                             : std::vector<int>{cfg.time.steps};
  CsvTable table{"sweep", {"steps", "eps", "max_abs_dev"},
                 std::vector<RVector>(steps.size())};
  RVector eps(steps.size()), dev(steps.size());
  detail::parallel_for(static_cast<int>(steps.size()), cfg.workers, [&](int i) {
    dev[i] = backshift_metric(cfg, steps[i]);
    eps[i] = cfg.time.total / steps[i];
    table.rows[i] = {static_cast<double>(steps[i]), eps[i], dev[i]};
  });
  report.tables.push_back(std::move(table));
  report.metrics["final_max_abs_dev"] = dev.back();

  if (steps.size() >= 3) {
    OrderFit fit = fit_order(eps, dev);
    report.metrics["fitted_order"] = fit.exact ? std::string("exact")
                                               : std::to_string(fit.order);
    double min_order = tolerance_or(cfg, "min_order", 1.0);
    report.checks.push_back(
        {"backshift_order", fit.exact || fit.order >= min_order,
         fit.exact ? std::numeric_limits<double>::infinity() : fit.order,
         min_order, "fitted convergence order of the back-shift deviation"});
  }
  return report;
}

inline RunReport run_commutator(const ExperimentConfig& cfg) {
  RunReport report;
  report.cfg = cfg;
  GridSet g = make_grids(cfg.space, cfg.time, cfg.physics);
  if (g.time.steps > 8)
    throw ValidationError(
        "commutator experiment is exhaustive over slice pairs; use steps <= 8");

  const int functionals = 20;
  std::mt19937 rng(777u);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto lines = detail::sample_lines(g, 5, 31u);

  CsvTable table{"pairs", {"functional", "n", "n_prime", "abs_error"}, {}};
  double worst = 0.0;
  for (int f = 0; f < functionals; ++f) {
    PolynomialFunctional func;
    for (int n = 0; n <= g.time.steps; ++n) {
      int degree = 1 + (f + n) % 3;
      CVector coeffs(degree + 1);
      for (Complex& c : coeffs) c = Complex{unit(rng), unit(rng)};
      func.factors.push_back(Polynomial{std::move(coeffs)});
    }
    for (int n = 0; n <= g.time.steps; ++n)
      for (int np = 0; np <= g.time.steps; ++np) {
        CommutatorReport r = commutator_check(func, n, np, lines, g);
        worst = std::max(worst, r.abs_error);
        table.rows.push_back({static_cast<double>(f), static_cast<double>(n),
                              static_cast<double>(np), r.abs_error});
      }
  }
  report.tables.push_back(std::move(table));
  report.metrics["max_abs_error"] = worst;
  double tol = tolerance_or(cfg, "commutator", 1e-12);
  report.checks.push_back({"commutator_identity", worst < tol, worst, tol,
                           "max |[x_n, p_n'] - i hbar delta| over all pairs"});
  return report;
}

inline RunReport run_spectrum(const ExperimentConfig& cfg) {
  RunReport report;
  report.cfg = cfg;
  std::vector<std::pair<int, int>> pairs;
  if (cfg.sweep && !cfg.sweep->pairs.empty())
    pairs = cfg.sweep->pairs;
  else
    pairs = {{cfg.time.steps, cfg.space.points}};

  CsvTable table{"residuals",
                 {"steps", "points", "dim", "rayleigh_re", "rayleigh_im",
                  "residual"},
                 {}};
  RVector residuals;
  for (auto [n, m] : pairs) {
    SpaceConfig sc = cfg.space;
    sc.points = m;
    TimeConfig tc = cfg.time;
    tc.steps = n;
    GridSet g = make_grids(sc, tc, cfg.physics);
    DenseOperator op = build_dense_action(cfg.potential, g);

    WaveHistory h = evolve(coherent_initial(cfg.initial, g), cfg.potential, g);
    TrajectoryTensor t = embed(MultiplicativeFunctional::from_history(h), g.space);
    Complex rq = rayleigh_quotient(op, t, g.space);
    double res = eigen_residual(op, t, g.space);
    residuals.push_back(res);
    table.rows.push_back({static_cast<double>(n), static_cast<double>(m),
                          static_cast<double>(op.matrix.rows()), rq.real(),
                          rq.imag(), res});

    // full spectra only at dimensions where the dense solve stays cheap
    if (op.matrix.rows() <= 512) {
      Spectrum s = eigen_decompose(op, g.space, false);
      CsvTable eig{"eigenvalues_N" + std::to_string(n) + "_M" + std::to_string(m),
                   {"re", "im"},
                   {}};
      for (const Complex& ev : s.eigenvalues)
        eig.rows.push_back({ev.real(), ev.imag()});
      report.tables.push_back(std::move(eig));
    }
  }
  report.tables.push_back(std::move(table));
  report.metrics["residuals"] = residuals;

  if (residuals.size() >= 2) {
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < residuals.size(); ++i)
      if (residuals[i + 1] >= residuals[i]) monotone = false;
    report.checks.push_back(
        {"residual_monotone", monotone, residuals.back(), residuals.front(),
         "eigen-residual of the embedded Schrodinger functional decreases "
         "across the sweep"});
  }
  return report;
}

inline RunReport run_classical(const ExperimentConfig& cfg) {
  RunReport report;
  report.cfg = cfg;
  GridSet g = make_grids(cfg.space, cfg.time, cfg.physics);
  const double T = g.time.total;
  const double m = g.params.mass;

  double x_start = cfg.initial.q0;
  double x_end = x_start + cfg.initial.k0 * T / m;
  if (const auto* harm = std::get_if<PotentialSpec::Harmonic>(&cfg.potential.kind)) {
    double w = harm->omega;
    x_end = x_start * std::cos(w * T) +
            cfg.initial.k0 / (m * w) * std::sin(w * T);
  }

  ClassicalPath guess;
  guess.x.resize(g.time.steps + 1);
  guess.p.assign(g.time.steps, m * (x_end - x_start) / T);
  for (int n = 0; n <= g.time.steps; ++n)
    guess.x[n] = x_start + (x_end - x_start) * g.time.t(n) / T;

  ClassicalPath path = extremize(x_start, x_end, cfg.potential, g, guess);
  ActionGradient grad = action_gradient(path, cfg.potential, g);
  double residual = 0.0;
  for (int n = 1; n < g.time.steps; ++n)
    residual = std::max(residual, std::abs(grad.d_x[n]));
  for (int n = 0; n < g.time.steps; ++n)
    residual = std::max(residual, std::abs(grad.d_p[n]));

  PhaseObservable action = action_observable(cfg.potential, g);
  double bracket_max = 0.0;
  for (int n = 1; n < g.time.steps; ++n) {
    double bx = poisson_bracket(PolyObservable::coordinate(n).as_observable(),
                                action, path, g);
    double bp = poisson_bracket(PolyObservable::momentum(n).as_observable(),
                                action, path, g);
    bracket_max = std::max({bracket_max, std::abs(bx), std::abs(bp)});
  }

  CsvTable table{"path", {"n", "t", "x", "p"}, {}};
  for (int n = 0; n <= g.time.steps; ++n)
    table.rows.push_back({static_cast<double>(n), g.time.t(n), path.x[n],
                          n < g.time.steps ? path.p[n]
                                           : std::numeric_limits<double>::quiet_NaN()});
  report.tables.push_back(std::move(table));

  report.metrics["action"] = classical_action(path, cfg.potential, g);
  report.metrics["gradient_residual"] = residual;
  report.metrics["bracket_max"] = bracket_max;
  report.metrics["x_end"] = x_end;

  double rtol = tolerance_or(cfg, "residual", 1e-10);
  double btol = tolerance_or(cfg, "bracket", 1e-8) / g.time.eps();
  report.checks.push_back({"stationarity", residual < rtol, residual, rtol,
                           "max interior action gradient component"});
  report.checks.push_back({"brackets_vanish", bracket_max < btol, bracket_max,
                           btol, "max |{x_n, I}|, |{p_n, I}| at the extremum"});
  return report;
}

inline RunReport run_variational(const ExperimentConfig& cfg) {
  RunReport report;
  report.cfg = cfg;
  GridSet g = make_grids(cfg.space, cfg.time, cfg.physics);

  GaussianAnsatz init = GaussianAnsatz::constant(
      g.time.steps, cfg.initial.q0, cfg.initial.k0, std::log(cfg.initial.sigma));
  int cap = static_cast<int>(tolerance_or(cfg, "max_iter", 500));
  double gtol = tolerance_or(cfg, "grad_tol", 1e-7);
  OptimizationTrace trace = extremize_lambda(init, cfg.potential, g, cap, gtol);

  CsvTable iters{"trace", {"iter", "lambda", "grad_norm"}, {}};
  for (std::size_t i = 0; i < trace.iterations.size(); ++i)
    iters.rows.push_back({static_cast<double>(i), trace.iterations[i].lambda,
                          trace.iterations[i].grad_norm});
  report.tables.push_back(std::move(iters));

  // classical reference trajectory for the centers
  double center_dev = 0.0;
  CsvTable params{"stationary", {"n", "t", "q", "k", "s", "phi", "q_classical"},
                  {}};
  const double m = g.params.mass;
  for (int n = 0; n <= g.time.steps; ++n) {
    double t = g.time.t(n);
    double q_cl = cfg.initial.q0 + cfg.initial.k0 * t / m;
    if (const auto* harm =
            std::get_if<PotentialSpec::Harmonic>(&cfg.potential.kind)) {
      double w = harm->omega;
      q_cl = cfg.initial.q0 * std::cos(w * t) +
             cfg.initial.k0 / (m * w) * std::sin(w * t);
    }
    center_dev = std::max(center_dev, std::abs(trace.final_params.q[n] - q_cl));
    params.rows.push_back({static_cast<double>(n), t, trace.final_params.q[n],
                           trace.final_params.k[n], trace.final_params.s[n],
                           trace.final_params.phi[n], q_cl});
  }
  report.tables.push_back(std::move(params));

  report.metrics["converged"] = trace.converged;
  report.metrics["final_lambda"] = trace.final_lambda;
  report.metrics["iterations"] = trace.iterations.size();
  report.metrics["center_deviation"] = center_dev;
  report.metrics["final_grad_norm"] = trace.iterations.back().grad_norm;

  report.checks.push_back({"converged", trace.converged,
                           trace.iterations.back().grad_norm, gtol,
                           "free-gradient max-norm below tolerance"});
  double ctol = tolerance_or(cfg, "center_tol", 5e-3);
  report.checks.push_back({"center_match", center_dev < ctol, center_dev, ctol,
                           "max |q_n - classical trajectory|"});
  return report;
}

inline RunReport run_convergence(const ExperimentConfig& cfg) {
  RunReport report;
  report.cfg = cfg;
  if (!cfg.sweep || cfg.sweep->steps.size() < 3)
    throw ValidationError("convergence experiment requires >= 3 sweep steps");

  double min_order_default = 1.0;
  std::function<double(int)> metric;
  if (cfg.metric == "action_equivalence") {
    metric = [&](int n) { return action_equivalence_metric(cfg, n); };
  } else if (cfg.metric == "backshift") {
    metric = [&](int n) { return backshift_metric(cfg, n); };
  } else if (cfg.metric == "energy_drift") {
    metric = [&](int n) { return energy_drift_metric(cfg, n); };
    min_order_default = 2.0;
  } else {
    throw ValidationError("unknown convergence metric '" + cfg.metric +
                          "' (expected action_equivalence, backshift or "
                          "energy_drift)");
  }

  const auto& steps = cfg.sweep->steps;
  RVector eps(steps.size()), values(steps.size());
  CsvTable table{"sweep", {"steps", "eps", "metric"},
                 std::vector<RVector>(steps.size())};
  detail::parallel_for(static_cast<int>(steps.size()), cfg.workers, [&](int i) {
    eps[i] = cfg.time.total / steps[i];
    values[i] = metric(steps[i]);
    table.rows[i] = {static_cast<double>(steps[i]), eps[i], values[i]};
  });
  report.tables.push_back(std::move(table));

  OrderFit fit = fit_order(eps, values);
  // metrics indistinguishable from rounding noise carry no slope information
  double floor = tolerance_or(cfg, "exact_floor", 1e-12);
  bool below_floor = true;
  for (double v : values) below_floor = below_floor && v < floor;
  bool exact = fit.exact || below_floor;

  report.metrics["metric"] = cfg.metric;
  report.metrics["fitted_order"] =
      exact ? std::string("exact") : std::to_string(fit.order);
  report.metrics["monotone"] = fit.monotone;
  report.metrics["ratios"] = fit.ratios;

  double min_order = tolerance_or(cfg, "min_order", min_order_default);
  std::string note = "fitted order of " + cfg.metric + " vs eps";
  if (exact)
    note += " (metric at or below the exact floor; no fit)";
  else if (!fit.monotone)
    note += " (non-monotone: order unreliable)";
  report.checks.push_back(
      {"convergence_order", exact || (fit.monotone && fit.order >= min_order),
       exact ? std::numeric_limits<double>::infinity() : fit.order, min_order,
       note});
  return report;
}

// --- dispatch, report serialization ---------------------------------------

inline RunReport run_experiment(const ExperimentConfig& cfg) {
  auto start = std::chrono::steady_clock::now();
  RunReport report;
  switch (cfg.experiment) {
    case ExperimentKind::Evolve: report = run_evolve(cfg); break;
    case ExperimentKind::ActionEquivalence:
      report = run_action_equivalence(cfg);
      break;
    case ExperimentKind::Backshift: report = run_backshift(cfg); break;
    case ExperimentKind::Commutator: report = run_commutator(cfg); break;
    case ExperimentKind::Spectrum: report = run_spectrum(cfg); break;
    case ExperimentKind::Classical: report = run_classical(cfg); break;
    case ExperimentKind::Variational: report = run_variational(cfg); break;
    case ExperimentKind::Convergence: report = run_convergence(cfg); break;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

inline nlohmann::json config_echo(const IniFile& file) {
  nlohmann::json echo;
  for (const auto& [section, keys] : file.sections)
    for (const auto& [key, value] : keys) echo[section][key] = value.text;
  return echo;
}

inline nlohmann::json report_json(const RunReport& report, const IniFile& echo) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["code_version"] = kCodeVersion;
  j["experiment"] = experiment_name(report.cfg.experiment);
  j["config"] = config_echo(echo);
  j["metrics"] = report.metrics;
  j["wall_seconds"] = report.wall_seconds;
  j["passed"] = report.passed();
  j["checks"] = nlohmann::json::array();
  for (const CheckResult& c : report.checks)
    j["checks"].push_back({{"name", c.name},
                           {"passed", c.passed},
                           {"value", c.value},
                           {"threshold", c.threshold},
                           {"note", c.note}});
  return j;
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    out << (c ? "," : "") << table.columns[c];
  out << "\n";
  out << std::scientific << std::setprecision(17);
  for (const RVector& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\n";
  }
}

// Writes report.json, every CSV table, and summary.txt under the output
// directory; returns the report path.
inline std::filesystem::path write_artifacts(const RunReport& report,
                                             const IniFile& echo,
                                             const std::string& output_dir) {
  std::filesystem::path dir(output_dir);
  std::filesystem::create_directories(dir);
  for (const CsvTable& table : report.tables)
    write_csv(dir / (table.name + ".csv"), table);

  std::filesystem::path report_path = dir / "report.json";
  std::ofstream out(report_path);
  if (!out) throw ValidationError("cannot write " + report_path.string());
  out << report_json(report, echo).dump(2) << "\n";

  std::ofstream summary(dir / "summary.txt");
  summary << experiment_name(report.cfg.experiment) << ": "
          << (report.passed() ? "PASS" : "FAIL") << "\n";
  summary << std::scientific << std::setprecision(6);
  for (const CheckResult& c : report.checks)
    summary << "  [" << (c.passed ? "ok" : "FAIL") << "] " << c.name
            << "  value=" << c.value << "  threshold=" << c.threshold << "  ("
            << c.note << ")\n";
  return report_path;
}

}  // namespace wfq
