#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hess/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"k-Hessian Dirichlet toolkit"};
  std::string command, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("command", command,
                 "one of structure|solve|verify|sweep|selftest")
      ->required();
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--seed", seed, "sampling seed (overrides config)");
  CLI11_PARSE(app, argc, argv);

  using namespace hess;
  try {
    io::CliOverrides ov;
    ov.command = command;
    if (!out_dir.empty()) ov.out_dir = out_dir;
    ov.seed = seed;
    io::RunConfig cfg;
    if (config_path.empty()) {
      if (command != "selftest") {
        std::cerr << "--config is required for " << command << "\n";
        return io::kExitBadConfig;
      }
      cfg = io::parse_config_text(R"({"command":"selftest"})", ov);
    } else {
      cfg = io::load_config(config_path, ov);
    }
    return io::run_command(cfg).exit_code;
  } catch (const io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return io::kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
