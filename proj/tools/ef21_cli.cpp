// ef21 run    [--config FILE] [--<key> VALUE ...]
// ef21 sweep  [--config FILE] [--<key> VALUE ...] --multipliers 1,2,4
// ef21 fixture NAME [--file PATH]
//
// Exit status: 0 success, 1 bad configuration or input, 2 divergence.

#include "ef21/ef21.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;

struct ConfigOptions {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key=value configuration file");
    for (const auto& key : ef21::harness::config_keys()) {
      cmd->add_option("--" + key, values[key], "overrides '" + key + "'");
    }
  }

  ef21::harness::RunConfig build(const CLI::App* cmd) const {
    ef21::harness::RunConfig cfg;
    if (!config_file.empty()) cfg = ef21::harness::load_config(config_file);
    for (const auto& key : ef21::harness::config_keys()) {
      if (cmd->count("--" + key) > 0) ef21::harness::set_key(cfg, key, values.at(key));
    }
    return cfg;
  }
};

void report(const ef21::harness::ExperimentResult& r, const ef21::harness::RunConfig& cfg) {
  const auto& last = r.trace.records.back();
  std::printf("rounds=%zu gamma=%.6g L=%.6g L_tilde=%.6g final_grad_sq_norm=%.6g\n", r.trace.rounds_completed(),
              r.resolved.gamma, r.resolved.L, r.resolved.L_tilde, last.grad_sq_norm);
  if (!cfg.out.empty()) std::printf("wrote %s/trace.csv\n", cfg.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EF21 experiments"};
  app.require_subcommand(1);

  ConfigOptions run_opts;
  auto* run = app.add_subcommand("run", "run one configuration");
  run_opts.attach(run);

  ConfigOptions sweep_opts;
  std::vector<double> multipliers;
  auto* sweep = app.add_subcommand("sweep", "run a grid of stepsize multiples");
  sweep_opts.attach(sweep);
  sweep->add_option("--multipliers", multipliers, "stepsize multiples of the theory value")->delimiter(',')->required();

  std::string fixture_name, fixture_file;
  auto* fixture = app.add_subcommand("fixture", "print a builtin dataset in LibSVM format");
  fixture->add_option("name", fixture_name)->required();
  fixture->add_option("--file", fixture_file, "write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) {
      const auto cfg = run_opts.build(run);
      report(ef21::harness::run_experiment(cfg), cfg);
    } else if (*sweep) {
      const auto cfg = sweep_opts.build(sweep);
      const auto rows = ef21::harness::sweep(cfg, multipliers, cfg.out);
      std::cout << ef21::harness::summary_csv(rows);
    } else if (*fixture) {
      const auto text = ef21::serialize_libsvm(ef21::fixtures::builtin(fixture_name));
      if (fixture_file.empty()) {
        std::cout << text;
      } else {
        ef21::harness::write_text(fixture_file, text);
      }
    }
  } catch (const ef21::DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDiverged;
  } catch (const ef21::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const ef21::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const ef21::UnsupportedLabelError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return 0;
}
