#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "medvp/grounding.hpp"
#include "medvp/http_client.hpp"
#include "medvp/log.hpp"
#include "medvp/manifest.hpp"
#include "medvp/render.hpp"

namespace medvp {

/// Every tunable of a pipeline run. Values come from, in increasing
/// precedence: defaults, a JSON config file, MEDVP_<KEY> environment
/// variables (upper-cased key, lists comma-separated), command-line flags.
/// The JSON keys are the field names below.
struct PipelineConfig {
  DatasetKind dataset = DatasetKind::kGeneric;
  std::string root;
  Split split = Split::kTest;
  std::string lang;

  std::string out_dir = "medvp_out";
  /// Stage files are <out_dir>/<stem>.<stage>.jsonl; default <dataset>_<split>.
  std::string stem;

  std::uint64_t master_seed = 0;
  std::vector<Shape> shapes{kAllShapes.begin(), kAllShapes.end()};
  std::vector<std::string> palette;
  double alpha_min = 0.6;
  double alpha_max = 0.9;
  std::vector<int> thickness = {2, 3, 4, 5};

  double score_threshold = kDefaultScoreThreshold;
  int top_k = 1;

  /// "gazetteer" or "llm".
  std::string entity_source = "gazetteer";
  /// Extra gazetteer file merged over the built-in one.
  std::string gazetteer;
  /// File holding a custom entity prompt with a {question} slot.
  std::string entity_prompt;
  std::string llm_url;
  std::string llm_model = "default";
  /// Never written to manifests.
  std::string llm_api_key;

  /// "stub" or "http".
  std::string detector = "stub";
  std::string stub_rules;
  std::string detector_url;
  bool send_base64 = false;

  std::string templates_dir;
  std::size_t workers = 1;
  int max_attempts = 4;
  int timeout_ms = 60000;

  PipelineConfig();

  /// All fields except llm_api_key, which is replaced by a boolean
  /// `llm_api_key_set`.
  [[nodiscard]] Json to_json() const;
  /// Overrides the fields present in `patch`. Throws Error on unknown keys
  /// or values of the wrong type.
  void merge_json(const Json& patch);
  /// Applies MEDVP_<KEY> variables found through `lookup`.
  void merge_env(const std::function<const char*(const char*)>& lookup);
  /// Throws Error describing the first invalid setting.
  void validate() const;

  [[nodiscard]] ShapeSpec shape_spec() const;
  [[nodiscard]] RetryPolicy retry_policy() const;
  [[nodiscard]] std::string resolved_stem() const;
  [[nodiscard]] std::filesystem::path stage_path(Stage stage) const;
  [[nodiscard]] std::filesystem::path image_dir() const;
};

/// JSON keys accepted by PipelineConfig::merge_json, in documentation order.
std::vector<std::string> config_keys();

/// Parses a JSON config file without applying it.
Json load_config_json(const std::filesystem::path& path);
PipelineConfig load_config_file(const std::filesystem::path& path);

/// A failure inside a stage, tagged with the stage and (when known) the
/// record being processed.
class StageError : public Error {
 public:
  StageError(Stage stage, std::string record_id, const std::string& what);
  [[nodiscard]] Stage stage() const { return stage_; }
  [[nodiscard]] const std::string& record_id() const { return record_id_; }

 private:
  Stage stage_;
  std::string record_id_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInvalid = 3;

/// Distinct exit code per stage: 10 (ingest) through 14 (adapt).
int exit_code_for(Stage stage);

Manifest run_ingest(const PipelineConfig& cfg, const Logger& log);
/// `transport` overrides the HTTP transport used for LLM extraction.
Manifest run_extract(const Manifest& in, const PipelineConfig& cfg, const Logger& log,
                     std::shared_ptr<HttpTransport> transport = nullptr);
std::unique_ptr<Detector> make_detector(const PipelineConfig& cfg, std::shared_ptr<HttpTransport> transport = nullptr);
Manifest run_ground(const Manifest& in, Detector& detector, const PipelineConfig& cfg, const Logger& log);
Manifest run_render(const Manifest& in, const PipelineConfig& cfg, const std::filesystem::path& image_dir,
                    const Logger& log);
Manifest run_adapt(const Manifest& in, const PipelineConfig& cfg, const Logger& log);

struct PipelineResult {
  std::vector<Stage> ran;
  std::vector<Stage> skipped;
  /// Files written (or, for a dry run, that would be written).
  std::vector<std::filesystem::path> outputs;
  std::filesystem::path final_manifest;
};

/// Runs ingest -> extract -> ground -> render -> adapt, writing each stage
/// file. Resumes after the latest stage file already present. A dry run
/// only reports the plan and touches no files.
PipelineResult run_pipeline(const PipelineConfig& cfg, const Logger& log, bool dry_run = false,
                            std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace medvp
