#pragma once

// Sectioned key = value config files and their validated ExperimentConfig
// form. The parser is hand-rolled so every diagnostic can carry a line
// number; the schema is documented in docs/config.md.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wfq/grid.hpp"
#include "wfq/oracle.hpp"
#include "wfq/variational.hpp"

namespace wfq {

struct IniValue {
  std::string text;
  int line = 0;
};

struct IniFile {
  // section -> key -> value; section/key order preserved separately for echo
  std::map<std::string, std::map<std::string, IniValue>> sections;
  std::string source;

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace detail

inline IniFile parse_ini(std::istream& in, const std::string& source) {
  IniFile file;
  file.source = source;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ValidationError(source + ":" + std::to_string(lineno) +
                              ": unterminated section header");
      section = detail::lower(detail::trim(s.substr(1, s.size() - 2)));
      if (section.empty())
        throw ValidationError(source + ":" + std::to_string(lineno) +
                              ": empty section name");
      file.sections[section];
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ValidationError(source + ":" + std::to_string(lineno) +
                            ": expected key = value");
    if (section.empty())
      throw ValidationError(source + ":" + std::to_string(lineno) +
                            ": key outside any [section]");
    std::string key = detail::lower(detail::trim(s.substr(0, eq)));
    std::string value = detail::trim(s.substr(eq + 1));
    if (key.empty())
      throw ValidationError(source + ":" + std::to_string(lineno) +
                            ": empty key");
    if (file.sections[section].count(key))
      throw ValidationError(source + ":" + std::to_string(lineno) +
                            ": duplicate key '" + key + "' in [" + section + "]");
    file.sections[section][key] = IniValue{value, lineno};
  }
  return file;
}

inline IniFile parse_ini_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  return parse_ini(in, path);
}

// Typed accessors; every failure names file, line and key.
class IniReader {
 public:
  explicit IniReader(const IniFile& file) : file_(file) {}

  const IniValue& require(const std::string& section, const std::string& key) const {
    auto s = file_.sections.find(section);
    if (s == file_.sections.end())
      throw ValidationError(file_.source + ": missing required section [" +
                            section + "]");
    auto k = s->second.find(key);
    if (k == s->second.end())
      throw ValidationError(file_.source + ": missing key '" + key +
                            "' in section [" + section + "]");
    return k->second;
  }

  std::string get_string(const std::string& section, const std::string& key) const {
    return require(section, key).text;
  }
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    return file_.has(section, key) ? file_.sections.at(section).at(key).text
                                   : fallback;
  }

  double get_double(const std::string& section, const std::string& key) const {
    return parse_double(require(section, key), section, key);
  }
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    if (!file_.has(section, key)) return fallback;
    return parse_double(file_.sections.at(section).at(key), section, key);
  }

  int get_int(const std::string& section, const std::string& key) const {
    return parse_int(require(section, key), section, key);
  }
  int get_int(const std::string& section, const std::string& key,
              int fallback) const {
    if (!file_.has(section, key)) return fallback;
    return parse_int(file_.sections.at(section).at(key), section, key);
  }

  std::vector<int> get_int_list(const std::string& section,
                                const std::string& key) const {
    const IniValue& v = require(section, key);
    std::vector<int> out;
    std::stringstream ss(v.text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (item.empty()) continue;
      out.push_back(parse_int(IniValue{item, v.line}, section, key));
    }
    if (out.empty())
      throw ValidationError(where(v, section, key) + ": empty list");
    return out;
  }

  bool has(const std::string& section, const std::string& key) const {
    return file_.has(section, key);
  }
  bool has_section(const std::string& section) const {
    return file_.sections.count(section) > 0;
  }

  const IniFile& file() const { return file_; }

 private:
  std::string where(const IniValue& v, const std::string& section,
                    const std::string& key) const {
    return file_.source + ":" + std::to_string(v.line) + ": [" + section + "] " +
           key;
  }
  double parse_double(const IniValue& v, const std::string& section,
                      const std::string& key) const {
    try {
      std::size_t pos = 0;
      double d = std::stod(v.text, &pos);
      if (pos != v.text.size()) throw std::invalid_argument("trailing characters");
      return d;
    } catch (const std::exception&) {
      throw ValidationError(where(v, section, key) + ": not a number: '" +
                            v.text + "'");
    }
  }
  int parse_int(const IniValue& v, const std::string& section,
                const std::string& key) const {
    try {
      std::size_t pos = 0;
      long d = std::stol(v.text, &pos);
      if (pos != v.text.size()) throw std::invalid_argument("trailing characters");
      if (d < -1000000000L || d > 1000000000L)
        throw std::out_of_range("out of range");
      return static_cast<int>(d);
    } catch (const std::exception&) {
      throw ValidationError(where(v, section, key) + ": not an integer: '" +
                            v.text + "'");
    }
  }
  const IniFile& file_;
};

enum class ExperimentKind {
  Evolve,
  ActionEquivalence,
  Backshift,
  Commutator,
  Spectrum,
  Classical,
  Variational,
  Convergence,
};

inline ExperimentKind experiment_from_name(const std::string& name) {
  std::string n = detail::lower(name);
  if (n == "evolve") return ExperimentKind::Evolve;
  if (n == "action_equivalence") return ExperimentKind::ActionEquivalence;
  if (n == "backshift") return ExperimentKind::Backshift;
  if (n == "commutator") return ExperimentKind::Commutator;
  if (n == "spectrum") return ExperimentKind::Spectrum;
  if (n == "classical") return ExperimentKind::Classical;
  if (n == "variational") return ExperimentKind::Variational;
  if (n == "convergence") return ExperimentKind::Convergence;
  throw ValidationError("unknown experiment '" + name + "'");
}

inline std::string experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Evolve: return "evolve";
    case ExperimentKind::ActionEquivalence: return "action_equivalence";
    case ExperimentKind::Backshift: return "backshift";
    case ExperimentKind::Commutator: return "commutator";
    case ExperimentKind::Spectrum: return "spectrum";
    case ExperimentKind::Classical: return "classical";
    case ExperimentKind::Variational: return "variational";
    default: return "convergence";
  }
}

// Initial state: a coherent Gaussian (center q0, momentum k0, width sigma,
// zero phase), sampled and normalized on the grid.
struct InitialState {
  double q0 = 0.0;
  double k0 = 0.0;
  double sigma = 1.0;  // e^s in ansatz terms
};

struct SweepConfig {
  std::vector<int> steps;            // N values (geometric progression expected)
  std::vector<std::pair<int, int>> pairs;  // (N, M) pairs for spectrum
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Evolve;
  SpaceConfig space;
  TimeConfig time;
  PhysicsConfig physics;
  PotentialSpec potential;
  InitialState initial;
  std::optional<SweepConfig> sweep;
  std::string output_dir = "out";
  std::string metric = "";  // convergence experiment: which metric to sweep
  int workers = 1;
  std::map<std::string, double> tolerances;
};

namespace detail {

inline PotentialSpec parse_potential(const IniReader& r) {
  std::string kind = lower(r.get_string("potential", "kind"));
  if (kind == "free") return PotentialSpec::free();
  if (kind == "harmonic")
    return PotentialSpec::harmonic(r.get_double("potential", "omega", 1.0));
  if (kind == "quartic")
    return PotentialSpec::quartic(r.get_double("potential", "a", 1.0));
  if (kind == "time_linear")
    return PotentialSpec::time_linear(r.get_double("potential", "g", 1.0));
  throw ValidationError(r.file().source + ": unknown potential kind '" + kind +
                        "' (expected free, harmonic, quartic or time_linear)");
}

inline Boundary parse_boundary(const IniReader& r) {
  std::string b = lower(r.get_string("space", "boundary", "dirichlet"));
  if (b == "dirichlet") return Boundary::Dirichlet;
  if (b == "periodic") return Boundary::Periodic;
  throw ValidationError(r.file().source + ": unknown boundary '" + b + "'");
}

}  // namespace detail

inline ExperimentConfig load_config(const IniFile& file) {
  IniReader r(file);
  ExperimentConfig cfg;
  cfg.experiment = experiment_from_name(r.get_string("experiment", "name"));

  cfg.space.x_min = r.get_double("space", "x_min", -8.0);
  cfg.space.x_max = r.get_double("space", "x_max", 8.0);
  cfg.space.points = r.get_int("space", "points", 256);
  cfg.space.boundary = detail::parse_boundary(r);

  cfg.time.total = r.get_double("time", "total", 1.0);
  cfg.time.steps = r.get_int("time", "steps", 16);

  cfg.physics.mass = r.get_double("physics", "mass", 1.0);
  cfg.physics.hbar = r.get_double("physics", "hbar", 1.0);

  cfg.potential = detail::parse_potential(r);

  if (r.has_section("initial")) {
    cfg.initial.q0 = r.get_double("initial", "q0", 0.0);
    cfg.initial.k0 = r.get_double("initial", "k0", 0.0);
    cfg.initial.sigma = r.get_double("initial", "sigma", 1.0 / std::sqrt(2.0));
    if (!(cfg.initial.sigma > 0.0))
      throw ValidationError(file.source + ": initial sigma must be positive");
  } else {
    cfg.initial.sigma = 1.0 / std::sqrt(2.0);
  }

  if (r.has_section("sweep")) {
    SweepConfig sw;
    if (r.has("sweep", "steps")) sw.steps = r.get_int_list("sweep", "steps");
    if (r.has("sweep", "pairs")) {
      // pairs = 2x4, 3x8  -> (N, M) list
      const IniValue& v = r.require("sweep", "pairs");
      std::stringstream ss(v.text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = detail::trim(item);
        if (item.empty()) continue;
        auto x = item.find('x');
        if (x == std::string::npos)
          throw ValidationError(file.source + ":" + std::to_string(v.line) +
                                ": sweep pair '" + item + "' is not NxM");
        int n = std::stoi(item.substr(0, x));
        int m = std::stoi(item.substr(x + 1));
        sw.pairs.emplace_back(n, m);
      }
    }
    if (sw.steps.empty() && sw.pairs.empty())
      throw ValidationError(file.source +
                            ": [sweep] requires 'steps' or 'pairs'");
    cfg.sweep = std::move(sw);
  }

  cfg.output_dir = r.get_string("output", "directory", "out");
  cfg.workers = r.get_int("output", "workers", 1);
  if (cfg.workers < 1)
    throw ValidationError(file.source + ": workers must be >= 1");
  cfg.metric = r.get_string("experiment", "metric", "");

  if (r.has_section("tolerances"))
    for (const auto& [key, value] : file.sections.at("tolerances"))
      cfg.tolerances[key] = r.get_double("tolerances", key);

  // cross-field validation
  make_grids(cfg.space, cfg.time, cfg.physics);

  if (cfg.experiment == ExperimentKind::Spectrum) {
    auto check_cap = [&](int n, int m) {
      TrajectoryTensor::capacity_for(m, n + 1);  // throws above the cap
    };
    if (cfg.sweep && !cfg.sweep->pairs.empty())
      for (auto [n, m] : cfg.sweep->pairs) check_cap(n, m);
    else
      check_cap(cfg.time.steps, cfg.space.points);
  }
  if (cfg.experiment == ExperimentKind::Convergence) {
    if (!cfg.sweep || cfg.sweep->steps.size() < 3)
      throw ValidationError(file.source +
                            ": convergence experiment requires a [sweep] with "
                            ">= 3 step counts");
    if (cfg.metric.empty())
      throw ValidationError(file.source +
                            ": convergence experiment requires [experiment] "
                            "metric = <name>");
  }
  return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  return load_config(parse_ini_file(path));
}

inline double tolerance_or(const ExperimentConfig& cfg, const std::string& key,
                           double fallback) {
  auto it = cfg.tolerances.find(key);
  return it == cfg.tolerances.end() ? fallback : it->second;
}

}  // namespace wfq
