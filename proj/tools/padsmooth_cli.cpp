// Experiment driver: run <config>, list, verify <artifact-dir>.

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "padsmooth/experiments.hpp"

namespace ps = padsmooth;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitVerify = 4;

int cmd_list() {
  for (const auto& e : ps::experiment_catalog())
    std::cout << e.name << "\t[" << e.tag << "]\t" << e.summary << '\n';
  return 0;
}

int cmd_run(const std::string& path) {
  ps::ExperimentConfig c = ps::load_experiment_config(path);
  if (const char* env = std::getenv("PADSMOOTH_OUTPUT")) c.output = env;
  const ps::ExperimentResult r = ps::run_experiment(c);
  ps::write_artifacts(c, r, c.output);
  std::cout << r.csv();
  std::cerr << "artifacts written to " << c.output << '\n';
  return 0;
}

int cmd_verify(const std::string& dir) {
  const auto bad = ps::verify_artifacts(dir);
  for (const auto& b : bad) std::cerr << "verify: " << b << '\n';
  if (!bad.empty()) return kExitVerify;
  std::cout << "verified " << dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"padded-partition smoothing experiments"};
  app.require_subcommand(1);
  std::string config, dir;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config, "config file")->required();
  auto* list = app.add_subcommand("list", "list experiments");
  auto* verify = app.add_subcommand("verify", "re-check an artifact directory");
  verify->add_option("dir", dir, "artifact directory")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }
  try {
    if (*list) return cmd_list();
    if (*run) return cmd_run(config);
    if (*verify) return cmd_verify(dir);
  } catch (const ps::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ps::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
