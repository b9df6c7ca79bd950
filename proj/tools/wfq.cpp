// wfq: config-driven experiment runner.
//
// Exit codes: 0 all checks passed, 1 a check failed, 2 config error,
// 3 numerical error.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wfq/config.hpp"
#include "wfq/experiments.hpp"

namespace {

wfq::ExperimentConfig load_with_overrides(const wfq::IniFile& ini) {
  wfq::ExperimentConfig cfg = wfq::load_config(ini);
  if (const char* dir = std::getenv("WFQ_OUTPUT_DIR")) cfg.output_dir = dir;
  if (const char* workers = std::getenv("WFQ_WORKERS")) {
    try {
      cfg.workers = std::max(1, std::stoi(workers));
    } catch (const std::exception&) {
      throw wfq::ValidationError("WFQ_WORKERS is not an integer: " +
                                 std::string(workers));
    }
  }
  return cfg;
}

int run_path(const std::string& path, bool sweep_required) {
  wfq::IniFile ini = wfq::parse_ini_file(path);
  wfq::ExperimentConfig cfg = load_with_overrides(ini);
  if (sweep_required && !cfg.sweep)
    throw wfq::ValidationError(path + ": 'wfq sweep' requires a [sweep] section");
  wfq::RunReport report = wfq::run_experiment(cfg);
  auto report_path = wfq::write_artifacts(report, ini, cfg.output_dir);
  std::cout << wfq::experiment_name(cfg.experiment) << ": "
            << (report.passed() ? "PASS" : "FAIL") << "  (report: "
            << report_path.string() << ")\n";
  for (const wfq::CheckResult& c : report.checks)
    std::cout << "  [" << (c.passed ? "ok" : "FAIL") << "] " << c.name
              << "  value=" << c.value << "  threshold=" << c.threshold << "\n";
  return report.passed() ? 0 : 1;
}

int validate_path(const std::string& path) {
  wfq::IniFile ini = wfq::parse_ini_file(path);
  load_with_overrides(ini);
  std::cout << path << ": valid\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wfq: time-sliced wave-functional experiments"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "run the experiment named in the config");
  run->add_option("config", config_path, "config file")->required();
  CLI::App* sweep =
      app.add_subcommand("sweep", "run the experiment across its [sweep] section");
  sweep->add_option("config", config_path, "config file")->required();
  CLI::App* validate =
      app.add_subcommand("validate", "parse and validate the config, run nothing");
  validate->add_option("config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) return validate_path(config_path);
    return run_path(config_path, sweep->parsed());
  } catch (const wfq::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const wfq::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
