#include "options.hpp"

#include <cstdlib>
#include <iostream>

#include "medvp/text.hpp"

namespace medvp::cli {

template <typename T>
void ConfigFlags::add(const std::string& flag, const std::string& key, const std::string& help) {
  auto patch = patch_;
  app_->add_option_function<T>(flag, [patch, key](const T& v) { (*patch)[key] = v; }, help);
}

void ConfigFlags::add_list(const std::string& flag, const std::string& key, const std::string& help, bool ints) {
  auto patch = patch_;
  app_->add_option_function<std::vector<std::string>>(
          flag,
          [patch, key, ints](const std::vector<std::string>& values) {
            Json arr = Json::array();
            for (const auto& v : values) {
              if (ints) {
                arr.push_back(std::stoi(v));
              } else {
                arr.push_back(v);
              }
            }
            (*patch)[key] = arr;
          },
          help)
      ->delimiter(',');
}

ConfigFlags& ConfigFlags::dataset() {
  add<std::string>("--dataset", "dataset", "Dataset layout: slake, vqa_rad, pmc_vqa or generic");
  add<std::string>("--root", "root", "Dataset root directory");
  add<std::string>("--split", "split", "train or test (default test)");
  add<std::string>("--lang", "lang", "Keep only records with this language tag (SLAKE)");
  return *this;
}

ConfigFlags& ConfigFlags::seed() {
  add<std::uint64_t>("--seed", "master_seed", "Master seed for prompt sampling (default 0)");
  return *this;
}

ConfigFlags& ConfigFlags::shape_spec() {
  add_list("--shapes", "shapes", "Comma-separated shapes to sample from (default scribble,rectangle,ellipse)");
  add_list("--palette", "palette", "Comma-separated color names (default red,green,blue,yellow,magenta,cyan)");
  add<double>("--alpha-min", "alpha_min", "Lowest marker opacity (default 0.6)");
  add<double>("--alpha-max", "alpha_max", "Highest marker opacity (default 0.9)");
  add_list("--thickness", "thickness", "Comma-separated stroke widths in pixels (default 2,3,4,5)", true);
  return *this;
}

ConfigFlags& ConfigFlags::extraction() {
  add<std::string>("--entity-source", "entity_source", "gazetteer (default) or llm");
  add<std::string>("--gazetteer", "gazetteer", "Extra gazetteer file merged over the built-in list");
  add<std::string>("--entity-prompt", "entity_prompt", "File with a custom LLM prompt containing {question}");
  add<std::string>("--llm-url", "llm_url", "Chat-completion endpoint URL (API key via MEDVP_LLM_API_KEY)");
  add<std::string>("--llm-model", "llm_model", "Model name sent to the endpoint");
  add<int>("--max-attempts", "max_attempts", "HTTP attempts per request (default 4)");
  add<int>("--timeout-ms", "timeout_ms", "HTTP timeout in milliseconds (default 60000)");
  return *this;
}

ConfigFlags& ConfigFlags::detection() {
  add<std::string>("--detector", "detector", "stub (default) or http");
  add<std::string>("--stub-rules", "stub_rules", "Rule file for the stub detector");
  add<std::string>("--detector-url", "detector_url", "Detector endpoint URL");
  auto patch = patch_;
  app_->add_flag_callback("--send-base64", [patch] { (*patch)["send_base64"] = true; },
                          "Send image bytes instead of the path to the detector");
  add<double>("--threshold", "score_threshold", "Detection score threshold (default 0.2)");
  add<int>("--top-k", "top_k", "Boxes kept per entity (default 1)");
  return *this;
}

ConfigFlags& ConfigFlags::templates() {
  add<std::string>("--templates", "templates_dir", "Directory of instruction templates (<name>.txt)");
  return *this;
}

ConfigFlags& ConfigFlags::workers() {
  add<std::size_t>("--workers", "workers", "Worker threads (default 1)");
  return *this;
}

ConfigFlags& ConfigFlags::output() {
  add<std::string>("--out-dir", "out_dir", "Output directory (default medvp_out)");
  add<std::string>("--stem", "stem", "Stage file stem (default <dataset>_<split>)");
  return *this;
}

PipelineConfig resolve_config(const Globals& g, const ConfigFlags& flags, const Json& base) {
  PipelineConfig cfg;
  cfg.merge_json(base);
  if (!g.config_file.empty()) cfg.merge_json(load_config_json(g.config_file));
  cfg.merge_env([](const char* name) { return std::getenv(name); });
  cfg.merge_json(flags.patch());
  cfg.validate();
  return cfg;
}

Json config_from_header(const ManifestHeader& header) {
  Json out = Json::object();
  const auto keys = config_keys();
  for (auto it = header.config.begin(); it != header.config.end(); ++it) {
    if (std::find(keys.begin(), keys.end(), it.key()) != keys.end()) out[it.key()] = it.value();
  }
  return out;
}

Logger make_logger(const Globals& g) {
  const LogLevel level = parse_log_level(g.log_level);
  return g.log_file.empty() ? Logger::to_stderr(level) : Logger::to_file(g.log_file, level);
}

std::string config_help() {
  std::string out =
      "Configuration: --config takes a JSON object whose keys are listed below. Each key can also be set\n"
      "through the environment as MEDVP_<KEY> (upper case, lists comma-separated). Flags override the\n"
      "environment, which overrides the config file.\n  keys:";
  std::size_t col = 8;
  for (const auto& k : config_keys()) {
    if (col + k.size() + 1 > 100) {
      out += "\n       ";
      col = 7;
    }
    out += " " + k;
    col += k.size() + 1;
  }
  out += "\nExit codes: 0 ok, 1 error, 2 usage, 3 validation failed, 10-14 failure in the\n"
         "ingest, extract, ground, render or adapt stage.";
  return out;
}

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace medvp::cli
