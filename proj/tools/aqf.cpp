// aqf: run | validate | print-defaults. Exit codes 0 success, 1 config error,
// 2 runtime error.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "aqf/config.hpp"
#include "aqf/runner.hpp"

namespace {

aqf::RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw aqf::ConfigError(path, "cannot open config file");
  return aqf::parse_config(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active quantum flock simulator"};
  app.require_subcommand(1);
  std::string path;
  auto* run = app.add_subcommand("run", "execute a run configuration");
  run->add_option("config", path, "INI config file")->required();
  auto* validate = app.add_subcommand("validate", "parse and validate a config without running it");
  validate->add_option("config", path, "INI config file")->required();
  auto* defaults = app.add_subcommand("print-defaults", "print every config key with its default");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (defaults->parsed()) {
    aqf::print_defaults(std::cout);
    return 0;
  }
  aqf::RunConfig cfg;
  try {
    cfg = load(path);
  } catch (const aqf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
  if (validate->parsed()) {
    std::cout << "ok " << aqf::to_string(cfg.mode) << " config-hash " << cfg.hash_hex() << '\n';
    return 0;
  }
  try {
    const auto summary = aqf::run(cfg);
    std::cout << "wrote " << summary.files.size() << " tables to " << summary.output_dir.string() << '\n'
              << summary.values.dump(2) << '\n';
  } catch (const aqf::ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << '\n';
    return 2;
  } catch (const aqf::IntegrationError& e) {
    std::cerr << "integration failure at t=" << e.time() << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
