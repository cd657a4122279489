#include <iostream>

#include "options.hpp"

int main(int argc, char** argv) {
  using namespace medvp;
  CLI::App app{"medvp: build, render and evaluate visual-prompt VQA datasets"};
  app.set_version_flag("--version", std::string(MEDVP_VERSION));
  app.require_subcommand(1);
  app.footer(cli::config_help());

  cli::Globals g;
  app.add_option("--config", g.config_file, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--log-level", g.log_level, "debug, info, warn, error or off")->capture_default_str();
  app.add_option("--log-file", g.log_file, "Write JSON-lines logs here instead of stderr");

  std::vector<std::pair<CLI::App*, cli::Command>> commands;
  cli::add_stage_commands(app, g, commands);
  cli::add_harness_commands(app, g, commands);
  for (auto& [sub, cmd] : commands) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  for (auto& [sub, cmd] : commands) {
    if (!sub->parsed()) continue;
    try {
      return cmd();
    } catch (const StageError& e) {
      std::cerr << "medvp " << sub->get_name() << ": " << e.what() << "\n";
      return exit_code_for(e.stage());
    } catch (const std::exception& e) {
      std::cerr << "medvp " << sub->get_name() << ": " << e.what() << "\n";
      return kExitFailure;
    }
  }
  return kExitUsage;
}
