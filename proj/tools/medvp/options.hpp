#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "medvp/log.hpp"
#include "medvp/manifest.hpp"
#include "medvp/pipeline.hpp"

namespace medvp::cli {

/// Options shared by every subcommand.
struct Globals {
  std::string config_file;
  std::string log_level = "info";
  std::string log_file;
};

/// Flags that map onto PipelineConfig keys. Only flags the user actually
/// passes end up in `patch`, so they override env and config-file values.
class ConfigFlags {
 public:
  explicit ConfigFlags(CLI::App* app) : app_(app), patch_(std::make_shared<Json>(Json::object())) {}

  ConfigFlags& dataset();
  ConfigFlags& seed();
  ConfigFlags& shape_spec();
  ConfigFlags& extraction();
  ConfigFlags& detection();
  ConfigFlags& templates();
  ConfigFlags& workers();
  ConfigFlags& output();

  [[nodiscard]] const Json& patch() const { return *patch_; }

 private:
  template <typename T>
  void add(const std::string& flag, const std::string& key, const std::string& help);
  void add_list(const std::string& flag, const std::string& key, const std::string& help, bool ints = false);

  CLI::App* app_;
  std::shared_ptr<Json> patch_;
};

/// defaults < `base` (usually the input manifest's recorded config) <
/// config file < environment < flags.
PipelineConfig resolve_config(const Globals& g, const ConfigFlags& flags, const Json& base = Json::object());

/// The subset of a manifest header's config that PipelineConfig accepts.
Json config_from_header(const ManifestHeader& header);

Logger make_logger(const Globals& g);

/// Text for the top-level help footer: config keys and environment names.
std::string config_help();

using Command = std::function<int()>;

void add_stage_commands(CLI::App& app, const Globals& g, std::vector<std::pair<CLI::App*, Command>>& out);
void add_harness_commands(CLI::App& app, const Globals& g, std::vector<std::pair<CLI::App*, Command>>& out);

void print_json(const Json& j);

}  // namespace medvp::cli
