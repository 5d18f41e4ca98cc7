#include "cli/app.hpp"

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "sloppykit/error.hpp"

namespace sloppykit::cli {

namespace {

void configure_logging() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("sloppykit");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("SLOPPYKIT_LOG")) {
      const std::string level = env;
      if (level == "error") spdlog::set_level(spdlog::level::err);
      else if (level == "warn") spdlog::set_level(spdlog::level::warn);
      else if (level == "info") spdlog::set_level(spdlog::level::info);
      else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    }
    return true;
  }();
  (void)once;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Sloppiness and identifiability analysis", "sloppykit"};
  std::string command_name;
  std::string config_path;
  std::string out_dir = ".";
  app.add_option("command", command_name, "fim | multiscale | levelset | identifiability | confidence | distance | models")
      ->required();
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory (default: current directory)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const auto command = parse_command(command_name);
  if (!command) {
    err << "error: unknown command \"" << command_name << "\"\n";
    return kExitConfig;
  }
  if (*command == Command::Models) {
    cmd_models(out);
    return kExitOk;
  }
  if (config_path.empty()) {
    err << "error: --config is required for \"" << command_name << "\"\n";
    return kExitConfig;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path, *command);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    switch (*command) {
      case Command::Fim: cmd_fim(cfg, out_dir); break;
      case Command::Multiscale: cmd_multiscale(cfg, out_dir); break;
      case Command::Levelset: cmd_levelset(cfg, out_dir); break;
      case Command::Identifiability: cmd_identifiability(cfg, out_dir); break;
      case Command::Confidence: cmd_confidence(cfg, out_dir); break;
      case Command::Distance: cmd_distance(cfg, out); break;
      case Command::Models: break;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace sloppykit::cli
