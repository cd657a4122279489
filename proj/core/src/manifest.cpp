#include "medvp/manifest.hpp"

#include <sstream>

#include "medvp/text.hpp"

namespace medvp {

namespace fs = std::filesystem;

namespace {

Json color_to_json(const NamedColor& c) {
  Json j;
  j["name"] = c.name;
  j["rgb"] = Json::array({c.rgb.r, c.rgb.g, c.rgb.b});
  return j;
}

NamedColor color_from_json(const Json& j) {
  NamedColor c;
  c.name = j.at("name").get<std::string>();
  const auto& rgb = j.at("rgb");
  if (!rgb.is_array() || rgb.size() != 3) throw Error("color.rgb must be a 3-element array");
  c.rgb = {rgb[0].get<std::uint8_t>(), rgb[1].get<std::uint8_t>(), rgb[2].get<std::uint8_t>()};
  return c;
}

Json prompt_to_json(const VisualPrompt& p) {
  Json j;
  j["shape"] = std::string(to_string(p.shape));
  j["color"] = color_to_json(p.color);
  j["alpha"] = p.alpha;
  j["thickness"] = p.thickness;
  Json g;
  if (p.shape == Shape::kScribble) {
    Json pts = Json::array();
    for (const auto& pt : p.control_points) pts.push_back(Json::array({pt.x, pt.y}));
    g["points"] = std::move(pts);
  } else {
    g["box"] = Json::array({p.geometry_box.x_min, p.geometry_box.y_min, p.geometry_box.x_max,
                            p.geometry_box.y_max});
  }
  j["geometry"] = std::move(g);
  j["source_box"] = box_to_json(p.source_box);
  return j;
}

VisualPrompt prompt_from_json(const Json& j) {
  VisualPrompt p;
  p.shape = parse_shape(j.at("shape").get<std::string>());
  p.color = color_from_json(j.at("color"));
  p.alpha = j.at("alpha").get<double>();
  p.thickness = j.at("thickness").get<int>();
  p.source_box = box_from_json(j.at("source_box"));
  const auto& g = j.at("geometry");
  p.geometry_box = p.source_box;
  if (p.shape == Shape::kScribble) {
    for (const auto& pt : g.at("points")) {
      if (!pt.is_array() || pt.size() != 2) throw Error("scribble point must be [x, y]");
      p.control_points.push_back({pt[0].get<int>(), pt[1].get<int>()});
    }
  } else {
    const auto& b = g.at("box");
    if (!b.is_array() || b.size() != 4) throw Error("geometry.box must be [x0, y0, x1, y1]");
    p.geometry_box.x_min = b[0].get<int>();
    p.geometry_box.y_min = b[1].get<int>();
    p.geometry_box.x_max = b[2].get<int>();
    p.geometry_box.y_max = b[3].get<int>();
  }
  return p;
}

std::vector<std::string> string_list(const Json& j, const char* key) {
  std::vector<std::string> out;
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    for (const auto& v : *it) out.push_back(v.get<std::string>());
  }
  return out;
}

template <typename T>
T value_or(const Json& j, const char* key, T fallback) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) return it->get<T>();
  return fallback;
}

bool is_header(const Json& j) { return j.is_object() && j.contains("schema_version"); }

void write_line(std::ostream& out, const Json& j) {
  out << j.dump(-1, ' ', false, Json::error_handler_t::replace) << '\n';
}

}  // namespace

Json box_to_json(const BoundingBox& b) {
  Json j;
  j["x_min"] = b.x_min;
  j["y_min"] = b.y_min;
  j["x_max"] = b.x_max;
  j["y_max"] = b.y_max;
  j["score"] = b.score;
  j["entity"] = b.entity;
  return j;
}

BoundingBox box_from_json(const Json& j) {
  BoundingBox b;
  b.x_min = j.at("x_min").get<int>();
  b.y_min = j.at("y_min").get<int>();
  b.x_max = j.at("x_max").get<int>();
  b.y_max = j.at("y_max").get<int>();
  b.score = value_or(j, "score", 1.0);
  b.entity = value_or<std::string>(j, "entity", "");
  return b;
}

Json record_to_json(const PromptedRecord& r) {
  const auto& b = r.base;
  Json base;
  base["id"] = b.id;
  base["image_path"] = b.image_path;
  base["question"] = b.question;
  base["answer"] = b.answer;
  base["answer_type"] = std::string(to_string(b.answer_type));
  base["options"] = b.options;
  base["dataset"] = std::string(to_string(b.dataset));
  base["answer_letter"] = b.answer_letter;
  base["lang"] = b.lang;
  base["missing_image"] = b.missing_image;

  Json j;
  j["base"] = std::move(base);
  j["entities"] = r.entities;
  Json boxes = Json::array();
  for (const auto& box : r.boxes) boxes.push_back(box_to_json(box));
  j["boxes"] = std::move(boxes);
  Json prompts = Json::array();
  for (const auto& p : r.prompts) prompts.push_back(prompt_to_json(p));
  j["prompts"] = std::move(prompts);
  j["prompted_image_path"] = r.prompted_image_path;
  j["instruction_text"] = r.instruction_text;
  j["seed"] = r.seed;
  j["image_width"] = r.image_size.width;
  j["image_height"] = r.image_size.height;
  j["flags"] = r.flags;
  return j;
}

PromptedRecord record_from_json(const Json& j) {
  if (!j.is_object()) throw Error("record must be a JSON object");
  PromptedRecord r;
  const Json& base = j.contains("base") ? j.at("base") : j;
  auto& b = r.base;
  b.id = base.at("id").get<std::string>();
  b.image_path = value_or<std::string>(base, "image_path", "");
  b.question = base.at("question").get<std::string>();
  b.answer = value_or<std::string>(base, "answer", "");
  b.answer_type = parse_answer_type(value_or<std::string>(base, "answer_type", "open"));
  b.options = string_list(base, "options");
  b.dataset = parse_dataset_kind(value_or<std::string>(base, "dataset", "generic"));
  b.answer_letter = value_or<std::string>(base, "answer_letter", "");
  b.lang = value_or<std::string>(base, "lang", "");
  b.missing_image = value_or(base, "missing_image", false);

  r.entities = string_list(j, "entities");
  if (auto it = j.find("boxes"); it != j.end()) {
    for (const auto& box : *it) r.boxes.push_back(box_from_json(box));
  }
  if (auto it = j.find("prompts"); it != j.end()) {
    for (const auto& p : *it) r.prompts.push_back(prompt_from_json(p));
  }
  r.prompted_image_path = value_or<std::string>(j, "prompted_image_path", "");
  r.instruction_text = value_or<std::string>(j, "instruction_text", "");
  r.seed = value_or<std::uint64_t>(j, "seed", 0);
  r.image_size.width = value_or(j, "image_width", 0);
  r.image_size.height = value_or(j, "image_height", 0);
  r.flags = string_list(j, "flags");
  return r;
}

Json header_to_json(const ManifestHeader& h) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["stage"] = std::string(to_string(h.stage));
  j["master_seed"] = h.master_seed;
  j["tool_version"] = h.tool_version;
  j["image_root"] = h.image_root;
  j["config"] = h.config;
  j["harness"] = h.harness;
  return j;
}

ManifestHeader header_from_json(const Json& j) {
  int version = j.at("schema_version").get<int>();
  if (version != kSchemaVersion) {
    throw Error("unsupported schema_version " + std::to_string(version));
  }
  ManifestHeader h;
  h.stage = parse_stage(j.at("stage").get<std::string>());
  h.master_seed = value_or<std::uint64_t>(j, "master_seed", 0);
  h.tool_version = value_or<std::string>(j, "tool_version", "");
  h.image_root = value_or<std::string>(j, "image_root", "");
  if (auto it = j.find("config"); it != j.end() && it->is_object()) h.config = *it;
  if (auto it = j.find("harness"); it != j.end() && it->is_object()) h.harness = *it;
  return h;
}

std::optional<std::size_t> Manifest::find(std::string_view id) const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].base.id == id) return i;
  }
  return std::nullopt;
}

ManifestReader::ManifestReader(const fs::path& path, ReadOptions opts)
    : file_(path, std::ios::binary), in_(&file_), opts_(opts) {
  if (!file_) throw ManifestError("cannot open manifest " + path.string(), 0);
  read_header();
}

ManifestReader::ManifestReader(std::istream& in, ReadOptions opts) : in_(&in), opts_(opts) {
  read_header();
}

std::optional<std::string> ManifestReader::next_line() {
  std::string line;
  while (std::getline(*in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) return line;
  }
  return std::nullopt;
}

void ManifestReader::read_header() {
  auto first = next_line();
  if (!first) return;
  Json j;
  try {
    j = Json::parse(*first);
  } catch (const std::exception& e) {
    throw ManifestError(std::string("malformed JSON: ") + e.what(), line_no_);
  }
  if (is_header(j)) {
    try {
      header_ = header_from_json(j);
    } catch (const std::exception& e) {
      throw ManifestError(std::string("bad header: ") + e.what(), line_no_);
    }
  } else {
    pending_ = std::move(*first);
    pending_line_ = line_no_;
  }
}

std::optional<PromptedRecord> ManifestReader::next() {
  std::string line;
  std::size_t at = 0;
  if (pending_) {
    line = std::move(*pending_);
    pending_.reset();
    at = pending_line_;
  } else {
    auto l = next_line();
    if (!l) return std::nullopt;
    line = std::move(*l);
    at = line_no_;
  }
  Json j;
  try {
    j = Json::parse(line);
  } catch (const std::exception& e) {
    throw ManifestError(std::string("malformed JSON: ") + e.what(), at);
  }
  PromptedRecord r;
  try {
    r = record_from_json(j);
  } catch (const std::exception& e) {
    throw ManifestError(std::string("invalid record: ") + e.what(), at);
  }
  if (opts_.check_invariants) {
    auto violations = record_violations(r);
    if (!violations.empty()) {
      throw ManifestError("record '" + r.base.id + "' violates invariants: " + join(violations, "; "),
                          at);
    }
    if (!seen_ids_.insert(r.base.id).second) {
      throw ManifestError("duplicate id '" + r.base.id + "'", at);
    }
  }
  return r;
}

Manifest parse_manifest(std::istream& in, const ReadOptions& opts) {
  ManifestReader reader(in, opts);
  Manifest m;
  m.header = reader.header();
  while (auto r = reader.next()) m.records.push_back(std::move(*r));
  return m;
}

Manifest read_manifest(const fs::path& path, const ReadOptions& opts) {
  ManifestReader reader(path, opts);
  Manifest m;
  m.header = reader.header();
  while (auto r = reader.next()) m.records.push_back(std::move(*r));
  return m;
}

void write_manifest(const Manifest& m, std::ostream& out) {
  write_line(out, header_to_json(m.header));
  for (const auto& r : m.records) write_line(out, record_to_json(r));
}

void write_manifest(const Manifest& m, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write manifest " + tmp.string());
    write_manifest(m, out);
    out.flush();
    if (!out) throw Error("failed writing manifest " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace medvp
