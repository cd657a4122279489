#include "medvp/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "medvp/adapt.hpp"
#include "medvp/entities.hpp"
#include "medvp/image.hpp"
#include "medvp/ingest.hpp"
#include "medvp/parallel.hpp"
#include "medvp/text.hpp"

namespace medvp {

namespace fs = std::filesystem;

namespace {

constexpr Stage kStages[] = {Stage::kIngested, Stage::kExtracted, Stage::kGrounded, Stage::kRendered,
                             Stage::kAdapted};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Turns an environment string into JSON shaped like `like`.
Json env_value(const std::string& key, const std::string& raw, const Json& like) {
  try {
    if (like.is_boolean()) {
      const std::string v = to_lower(trim(raw));
      if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
      if (v == "0" || v == "false" || v == "no" || v == "off" || v.empty()) return false;
      throw Error("expected a boolean");
    }
    if (like.is_number_unsigned()) return static_cast<std::uint64_t>(std::stoull(trim(raw)));
    if (like.is_number_integer()) return std::stoll(trim(raw));
    if (like.is_number_float()) return std::stod(trim(raw));
    if (like.is_array()) {
      Json arr = Json::array();
      for (const auto& item : split_list(raw)) {
        if (key == "thickness") {
          arr.push_back(std::stoi(item));
        } else {
          arr.push_back(item);
        }
      }
      return arr;
    }
  } catch (const std::logic_error&) {
    throw Error("environment variable MEDVP_" + to_upper(key) + ": cannot parse '" + raw + "'");
  }
  return raw;
}

template <typename T>
void take(const Json& patch, const char* key, T& field) {
  if (auto it = patch.find(key); it != patch.end()) field = it->template get<T>();
}

Manifest with_stage(const Manifest& in, Stage stage, const PipelineConfig& cfg) {
  Manifest out;
  out.header = in.header;
  out.header.stage = stage;
  out.header.master_seed = cfg.master_seed;
  Json config = cfg.to_json();
  for (auto it = in.header.config.begin(); it != in.header.config.end(); ++it) {
    if (!config.contains(it.key())) config[it.key()] = it.value();
  }
  out.header.config = std::move(config);
  return out;
}

void require_stage(const Manifest& in, Stage expected, Stage running) {
  if (in.stage() != expected) {
    throw StageError(running, "",
                     "expected a '" + std::string(to_string(expected)) + "' manifest, got '" +
                         std::string(to_string(in.stage())) + "'");
  }
}

// Runs fn over every record in parallel; failures carry the record id.
template <typename Fn>
void for_each_record(std::vector<PromptedRecord>& records, const PipelineConfig& cfg, Stage stage, Fn&& fn) {
  parallel_for(records.size(), cfg.workers, [&](std::size_t i) {
    try {
      fn(records[i]);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(stage, records[i].base.id, e.what());
    }
  });
}

}  // namespace

PipelineConfig::PipelineConfig() {
  for (const auto& c : default_palette()) palette.push_back(c.name);
}

std::vector<std::string> config_keys() {
  return {"dataset",       "root",         "split",        "lang",           "out_dir",       "stem",
          "master_seed",   "shapes",       "palette",      "alpha_min",      "alpha_max",     "thickness",
          "score_threshold", "top_k",      "entity_source", "gazetteer",     "entity_prompt", "llm_url",
          "llm_model",     "llm_api_key",  "detector",     "stub_rules",     "detector_url",  "send_base64",
          "templates_dir", "workers",      "max_attempts", "timeout_ms"};
}

Json PipelineConfig::to_json() const {
  Json j;
  j["dataset"] = std::string(to_string(dataset));
  j["root"] = root;
  j["split"] = std::string(to_string(split));
  j["lang"] = lang;
  j["out_dir"] = out_dir;
  j["stem"] = stem;
  j["master_seed"] = master_seed;
  Json s = Json::array();
  for (Shape sh : shapes) s.push_back(std::string(to_string(sh)));
  j["shapes"] = std::move(s);
  j["palette"] = palette;
  j["alpha_min"] = alpha_min;
  j["alpha_max"] = alpha_max;
  j["thickness"] = thickness;
  j["score_threshold"] = score_threshold;
  j["top_k"] = top_k;
  j["entity_source"] = entity_source;
  j["gazetteer"] = gazetteer;
  j["entity_prompt"] = entity_prompt;
  j["llm_url"] = llm_url;
  j["llm_model"] = llm_model;
  j["llm_api_key_set"] = !llm_api_key.empty();
  j["detector"] = detector;
  j["stub_rules"] = stub_rules;
  j["detector_url"] = detector_url;
  j["send_base64"] = send_base64;
  j["templates_dir"] = templates_dir;
  j["workers"] = workers;
  j["max_attempts"] = max_attempts;
  j["timeout_ms"] = timeout_ms;
  return j;
}

void PipelineConfig::merge_json(const Json& patch) {
  if (!patch.is_object()) throw Error("configuration must be a JSON object");
  const auto keys = config_keys();
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.key() == "llm_api_key_set") continue;
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end()) {
      throw Error("unknown configuration key '" + it.key() + "'");
    }
  }
  try {
    if (auto it = patch.find("dataset"); it != patch.end()) dataset = parse_dataset_kind(it->get<std::string>());
    if (auto it = patch.find("split"); it != patch.end()) split = parse_split(it->get<std::string>());
    if (auto it = patch.find("shapes"); it != patch.end()) {
      shapes.clear();
      for (const auto& s : *it) shapes.push_back(parse_shape(s.get<std::string>()));
    }
    take(patch, "root", root);
    take(patch, "lang", lang);
    take(patch, "out_dir", out_dir);
    take(patch, "stem", stem);
    take(patch, "master_seed", master_seed);
    take(patch, "palette", palette);
    take(patch, "alpha_min", alpha_min);
    take(patch, "alpha_max", alpha_max);
    take(patch, "thickness", thickness);
    take(patch, "score_threshold", score_threshold);
    take(patch, "top_k", top_k);
    take(patch, "entity_source", entity_source);
    take(patch, "gazetteer", gazetteer);
    take(patch, "entity_prompt", entity_prompt);
    take(patch, "llm_url", llm_url);
    take(patch, "llm_model", llm_model);
    take(patch, "llm_api_key", llm_api_key);
    take(patch, "detector", detector);
    take(patch, "stub_rules", stub_rules);
    take(patch, "detector_url", detector_url);
    take(patch, "send_base64", send_base64);
    take(patch, "templates_dir", templates_dir);
    take(patch, "workers", workers);
    take(patch, "max_attempts", max_attempts);
    take(patch, "timeout_ms", timeout_ms);
  } catch (const Json::exception& e) {
    throw Error(std::string("invalid configuration value: ") + e.what());
  }
}

void PipelineConfig::merge_env(const std::function<const char*(const char*)>& lookup) {
  Json defaults = PipelineConfig().to_json();
  defaults["llm_api_key"] = "";
  Json patch = Json::object();
  for (const auto& key : config_keys()) {
    const std::string name = "MEDVP_" + to_upper(key);
    const char* value = lookup(name.c_str());
    if (!value) continue;
    patch[key] = env_value(key, value, defaults.at(key));
  }
  merge_json(patch);
}

void PipelineConfig::validate() const {
  validate_shape_spec(shape_spec());
  if (!(alpha_min >= 0.0 && alpha_max <= 1.0 && alpha_min <= alpha_max)) {
    throw Error("alpha range must satisfy 0 <= alpha_min <= alpha_max <= 1");
  }
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) throw Error("score_threshold must be in [0, 1]");
  if (top_k < 1) throw Error("top_k must be at least 1");
  if (workers < 1) throw Error("workers must be at least 1");
  if (max_attempts < 1) throw Error("max_attempts must be at least 1");
  if (timeout_ms < 1) throw Error("timeout_ms must be positive");
  if (entity_source != "gazetteer" && entity_source != "llm") {
    throw Error("entity_source must be 'gazetteer' or 'llm'");
  }
  if (entity_source == "llm" && llm_url.empty()) throw Error("entity_source 'llm' needs llm_url");
  if (detector != "stub" && detector != "http") throw Error("detector must be 'stub' or 'http'");
  if (detector == "http" && detector_url.empty()) throw Error("detector 'http' needs detector_url");
}

ShapeSpec PipelineConfig::shape_spec() const {
  ShapeSpec spec;
  spec.shapes = shapes;
  spec.palette.clear();
  for (const auto& name : palette) spec.palette.push_back(palette_color(name));
  spec.alpha_min_permille = static_cast<int>(std::lround(alpha_min * 1000.0));
  spec.alpha_max_permille = static_cast<int>(std::lround(alpha_max * 1000.0));
  spec.thickness_choices = thickness;
  return spec;
}

RetryPolicy PipelineConfig::retry_policy() const {
  RetryPolicy p;
  p.max_attempts = max_attempts;
  return p;
}

std::string PipelineConfig::resolved_stem() const {
  if (!stem.empty()) return stem;
  return std::string(to_string(dataset)) + "_" + std::string(to_string(split));
}

fs::path PipelineConfig::stage_path(Stage stage) const {
  return fs::path(out_dir) / (resolved_stem() + "." + std::string(to_string(stage)) + ".jsonl");
}

fs::path PipelineConfig::image_dir() const { return fs::path(out_dir) / "images"; }

Json load_config_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error("config file " + path.string() + ": " + e.what());
  }
  return j;
}

PipelineConfig load_config_file(const fs::path& path) {
  PipelineConfig cfg;
  cfg.merge_json(load_config_json(path));
  return cfg;
}

StageError::StageError(Stage stage, std::string record_id, const std::string& what)
    : Error("stage '" + std::string(to_string(stage)) + "' failed" +
            (record_id.empty() ? std::string() : " at record '" + record_id + "'") + ": " + what),
      stage_(stage),
      record_id_(std::move(record_id)) {}

int exit_code_for(Stage stage) { return 10 + static_cast<int>(stage); }

Manifest run_ingest(const PipelineConfig& cfg, const Logger& log) {
  IngestResult result;
  try {
    IngestOptions opts;
    opts.lang = cfg.lang;
    opts.workers = cfg.workers;
    result = ingest(cfg.dataset, cfg.root, cfg.split, opts);
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(Stage::kIngested, "", e.what());
  }
  for (const auto& r : result.rejects) {
    log.warn("entry_rejected", {{"source", r.source}, {"entry", r.entry}, {"reason", r.reason}});
  }
  for (const auto& r : result.manifest.records) {
    if (r.base.missing_image) log.warn("image_missing", {{"id", r.base.id}, {"image", r.base.image_path}});
  }
  Manifest m = with_stage(result.manifest, Stage::kIngested, cfg);
  m.records = std::move(result.manifest.records);
  log.info("ingested", {{"records", m.records.size()},
                        {"source_entries", result.source_entries},
                        {"rejected", result.rejects.size()}});
  return m;
}

Manifest run_extract(const Manifest& in, const PipelineConfig& cfg, const Logger& log,
                     std::shared_ptr<HttpTransport> transport) {
  require_stage(in, Stage::kIngested, Stage::kExtracted);
  Gazetteer gazetteer = Gazetteer::builtin();
  std::optional<LlmEntityClient> client;
  try {
    if (!cfg.gazetteer.empty()) gazetteer.extend(Gazetteer::load(cfg.gazetteer));
    if (cfg.entity_source == "llm") {
      LlmEndpoint endpoint{cfg.llm_url, cfg.llm_api_key, cfg.llm_model, cfg.retry_policy()};
      if (!transport) transport = make_http_transport(std::chrono::milliseconds(cfg.timeout_ms));
      std::string prompt(default_entity_prompt());
      if (!cfg.entity_prompt.empty()) {
        std::ifstream f(cfg.entity_prompt);
        if (!f) throw Error("cannot open entity prompt " + cfg.entity_prompt);
        std::stringstream ss;
        ss << f.rdbuf();
        prompt = ss.str();
      }
      client.emplace(endpoint, transport, prompt);
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(Stage::kExtracted, "", e.what());
  }

  Manifest out = with_stage(in, Stage::kExtracted, cfg);
  out.header.config["entity_source"] = cfg.entity_source;
  out.records = in.records;
  for_each_record(out.records, cfg, Stage::kExtracted, [&](PromptedRecord& r) {
    r.entities = client ? extract_llm(r.base.question, *client, &gazetteer) : gazetteer.extract(r.base.question);
  });
  std::size_t without = 0;
  for (const auto& r : out.records) {
    if (r.entities.empty()) {
      ++without;
      log.debug("no_entities", {{"id", r.base.id}});
    }
  }
  log.info("extracted", {{"records", out.records.size()}, {"without_entities", without}});
  return out;
}

std::unique_ptr<Detector> make_detector(const PipelineConfig& cfg, std::shared_ptr<HttpTransport> transport) {
  if (cfg.detector == "stub") {
    if (cfg.stub_rules.empty()) return std::make_unique<StubDetector>(StubDetector::Rules{});
    return std::make_unique<StubDetector>(StubDetector::load(cfg.stub_rules));
  }
  if (cfg.detector == "http") {
    if (!transport) transport = make_http_transport(std::chrono::milliseconds(cfg.timeout_ms));
    return std::make_unique<HttpDetector>(cfg.detector_url, std::move(transport), cfg.retry_policy(),
                                          cfg.send_base64);
  }
  throw Error("unknown detector '" + cfg.detector + "'");
}

Manifest run_ground(const Manifest& in, Detector& detector, const PipelineConfig& cfg, const Logger& log) {
  require_stage(in, Stage::kExtracted, Stage::kGrounded);
  Manifest out = with_stage(in, Stage::kGrounded, cfg);
  out.records = in.records;
  const fs::path root = in.header.image_root;
  for_each_record(out.records, cfg, Stage::kGrounded, [&](PromptedRecord& r) {
    r.boxes.clear();
    if (r.base.missing_image || r.entities.empty()) return;
    const fs::path image = original_image_path(r, root);
    if (r.image_size.width <= 0 || r.image_size.height <= 0) r.image_size = read_image_size(image);
    GroundingRequest req{r.base.image_path, image, r.image_size, r.entities, cfg.score_threshold};
    r.boxes = ground(detector, req, cfg.top_k);
  });
  std::size_t boxes = 0;
  std::size_t skipped = 0;
  for (const auto& r : out.records) {
    boxes += r.boxes.size();
    if (r.base.missing_image) {
      ++skipped;
      log.warn("ground_skipped", {{"id", r.base.id}, {"reason", "image missing"}});
    }
  }
  log.info("grounded", {{"records", out.records.size()}, {"boxes", boxes}, {"skipped", skipped}});
  return out;
}

Manifest run_render(const Manifest& in, const PipelineConfig& cfg, const fs::path& image_dir, const Logger& log) {
  require_stage(in, Stage::kGrounded, Stage::kRendered);
  RenderConfig rc;
  try {
    rc.spec = cfg.shape_spec();
    validate_shape_spec(rc.spec);
    fs::create_directories(image_dir);
  } catch (const std::exception& e) {
    throw StageError(Stage::kRendered, "", e.what());
  }
  rc.master_seed = cfg.master_seed;
  rc.image_root = in.header.image_root;
  rc.out_dir = image_dir;

  Manifest out = with_stage(in, Stage::kRendered, cfg);
  out.records = in.records;
  std::vector<std::vector<std::string>> warnings(out.records.size());
  parallel_for(out.records.size(), cfg.workers, [&](std::size_t i) {
    try {
      out.records[i] = render_record(out.records[i], rc, &warnings[i]);
    } catch (const std::exception& e) {
      throw StageError(Stage::kRendered, out.records[i].base.id, e.what());
    }
  });
  std::size_t failed = 0;
  std::size_t prompts = 0;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    for (const auto& w : warnings[i]) log.warn("render_warning", {{"id", out.records[i].base.id}, {"message", w}});
    failed += out.records[i].has_flag("render_failed") ? 1 : 0;
    prompts += out.records[i].prompts.size();
  }
  log.info("rendered", {{"records", out.records.size()}, {"prompts", prompts}, {"failed", failed}});
  return out;
}

Manifest run_adapt(const Manifest& in, const PipelineConfig& cfg, const Logger& log) {
  require_stage(in, Stage::kRendered, Stage::kAdapted);
  try {
    const InstructionTemplates templates =
        cfg.templates_dir.empty() ? InstructionTemplates::defaults() : InstructionTemplates::load(cfg.templates_dir);
    Manifest staged = with_stage(in, Stage::kRendered, cfg);
    staged.records = in.records;
    Manifest out = adapt_manifest(staged, templates);
    log.info("adapted", {{"records", out.records.size()}, {"templates_version", templates.version}});
    return out;
  } catch (const std::exception& e) {
    throw StageError(Stage::kAdapted, "", e.what());
  }
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const Logger& log, bool dry_run,
                            std::shared_ptr<HttpTransport> transport) {
  cfg.validate();
  PipelineResult result;
  int resume = -1;
  for (int i = static_cast<int>(std::size(kStages)) - 1; i >= 0; --i) {
    if (fs::is_regular_file(cfg.stage_path(kStages[i]))) {
      resume = i;
      break;
    }
  }
  for (int i = 0; i <= resume; ++i) {
    result.skipped.push_back(kStages[i]);
    log.info("stage_skipped", {{"stage", std::string(to_string(kStages[i]))},
                               {"file", cfg.stage_path(kStages[i]).generic_string()}});
  }
  result.final_manifest = cfg.stage_path(Stage::kAdapted);

  if (dry_run) {
    Json plan = Json::array();
    for (std::size_t i = static_cast<std::size_t>(resume + 1); i < std::size(kStages); ++i) {
      result.ran.push_back(kStages[i]);
      result.outputs.push_back(cfg.stage_path(kStages[i]));
      plan.push_back(std::string(to_string(kStages[i])));
    }
    log.info("dry_run", {{"would_run", plan}, {"out_dir", cfg.out_dir}});
    return result;
  }

  fs::create_directories(cfg.out_dir);
  Manifest current;
  if (resume >= 0) {
    current = read_manifest(cfg.stage_path(kStages[resume]));
    log.info("resumed", {{"stage", std::string(to_string(kStages[resume]))}, {"records", current.records.size()}});
  }
  std::unique_ptr<Detector> detector;
  for (std::size_t i = static_cast<std::size_t>(resume + 1); i < std::size(kStages); ++i) {
    const Stage stage = kStages[i];
    log.info("stage_start", {{"stage", std::string(to_string(stage))}});
    switch (stage) {
      case Stage::kIngested:
        current = run_ingest(cfg, log);
        break;
      case Stage::kExtracted:
        current = run_extract(current, cfg, log, transport);
        break;
      case Stage::kGrounded:
        try {
          detector = make_detector(cfg, transport);
        } catch (const std::exception& e) {
          throw StageError(stage, "", e.what());
        }
        current = run_ground(current, *detector, cfg, log);
        break;
      case Stage::kRendered:
        current = run_render(current, cfg, cfg.image_dir(), log);
        break;
      case Stage::kAdapted:
        current = run_adapt(current, cfg, log);
        break;
    }
    const fs::path path = cfg.stage_path(stage);
    write_manifest(current, path);
    result.ran.push_back(stage);
    result.outputs.push_back(path);
    log.info("stage_done", {{"stage", std::string(to_string(stage))}, {"file", path.generic_string()}});
  }
  return result;
}

}  // namespace medvp
