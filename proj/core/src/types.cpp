#include "medvp/types.hpp"

#include <algorithm>
#include <cmath>

#include "medvp/text.hpp"

namespace medvp {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::array<std::pair<std::string_view, E>, N>& table,
             std::string_view what) {
  std::string key = to_lower(trim(s));
  for (const auto& [name, value] : table) {
    if (key == name) return value;
  }
  throw Error("unknown " + std::string(what) + ": '" + std::string(s) + "'");
}

constexpr std::array<std::pair<std::string_view, AnswerType>, 2> kAnswerTypes = {{
    {"open", AnswerType::kOpen},
    {"closed", AnswerType::kClosed},
}};
constexpr std::array<std::pair<std::string_view, DatasetKind>, 4> kDatasets = {{
    {"slake", DatasetKind::kSlake},
    {"vqa_rad", DatasetKind::kVqaRad},
    {"pmc_vqa", DatasetKind::kPmcVqa},
    {"generic", DatasetKind::kGeneric},
}};
constexpr std::array<std::pair<std::string_view, Shape>, 3> kShapes = {{
    {"scribble", Shape::kScribble},
    {"rectangle", Shape::kRectangle},
    {"ellipse", Shape::kEllipse},
}};
constexpr std::array<std::pair<std::string_view, Split>, 2> kSplits = {{
    {"train", Split::kTrain},
    {"test", Split::kTest},
}};
constexpr std::array<std::pair<std::string_view, Stage>, 5> kStages = {{
    {"ingested", Stage::kIngested},
    {"extracted", Stage::kExtracted},
    {"grounded", Stage::kGrounded},
    {"rendered", Stage::kRendered},
    {"adapted", Stage::kAdapted},
}};

template <typename E, std::size_t N>
std::string_view name_of(E v, const std::array<std::pair<std::string_view, E>, N>& table) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "?";
}

}  // namespace

std::string_view to_string(AnswerType t) { return name_of(t, kAnswerTypes); }
std::string_view to_string(DatasetKind k) { return name_of(k, kDatasets); }
std::string_view to_string(Shape s) { return name_of(s, kShapes); }
std::string_view to_string(Split s) { return name_of(s, kSplits); }
std::string_view to_string(Stage s) { return name_of(s, kStages); }

AnswerType parse_answer_type(std::string_view s) { return parse_enum(s, kAnswerTypes, "answer type"); }
DatasetKind parse_dataset_kind(std::string_view s) { return parse_enum(s, kDatasets, "dataset kind"); }
Shape parse_shape(std::string_view s) { return parse_enum(s, kShapes, "shape"); }
Split parse_split(std::string_view s) { return parse_enum(s, kSplits, "split"); }
Stage parse_stage(std::string_view s) { return parse_enum(s, kStages, "stage"); }

const std::vector<NamedColor>& default_palette() {
  static const std::vector<NamedColor> palette = {
      {"red", {255, 0, 0}},     {"green", {0, 255, 0}},     {"blue", {0, 0, 255}},
      {"yellow", {255, 255, 0}}, {"magenta", {255, 0, 255}}, {"cyan", {0, 255, 255}},
  };
  return palette;
}

const NamedColor& palette_color(std::string_view name) {
  for (const auto& c : default_palette()) {
    if (c.name == name) return c;
  }
  throw Error("unknown palette color: '" + std::string(name) + "'");
}

std::optional<std::string> box_violation(const BoundingBox& b, ImageSize bounds) {
  if (b.x_min >= b.x_max) {
    return "x_min >= x_max (" + std::to_string(b.x_min) + " >= " + std::to_string(b.x_max) + ")";
  }
  if (b.y_min >= b.y_max) {
    return "y_min >= y_max (" + std::to_string(b.y_min) + " >= " + std::to_string(b.y_max) + ")";
  }
  if (!(b.score >= 0.0 && b.score <= 1.0)) return "score outside [0,1]";
  if (bounds.width > 0 && bounds.height > 0) {
    if (b.x_min < 0 || b.y_min < 0 || b.x_max > bounds.width || b.y_max > bounds.height) {
      return "box outside image bounds";
    }
  }
  return std::nullopt;
}

std::optional<BoundingBox> clip_box(BoundingBox box, ImageSize bounds) {
  box.x_min = std::clamp(box.x_min, 0, bounds.width);
  box.x_max = std::clamp(box.x_max, 0, bounds.width);
  box.y_min = std::clamp(box.y_min, 0, bounds.height);
  box.y_max = std::clamp(box.y_max, 0, bounds.height);
  if (box.x_min >= box.x_max || box.y_min >= box.y_max) return std::nullopt;
  return box;
}

std::string option_letter_of(const VQARecord& r) {
  for (std::size_t i = 0; i < r.options.size() && i < 26; ++i) {
    if (r.options[i] == r.answer) return std::string(1, static_cast<char>('A' + i));
  }
  return {};
}

bool PromptedRecord::has_flag(std::string_view f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

void PromptedRecord::add_flag(std::string_view f) {
  if (!has_flag(f)) flags.emplace_back(f);
}

std::vector<std::string> record_violations(const PromptedRecord& r) {
  std::vector<std::string> out;
  const auto& b = r.base;
  if (b.id.empty()) out.emplace_back("empty id");
  if (b.answer_type == AnswerType::kClosed && !b.options.empty()) {
    bool in_options = std::find(b.options.begin(), b.options.end(), b.answer) != b.options.end();
    bool is_letter = false;
    std::string a = to_upper(trim(b.answer));
    if (a.size() == 1 && a[0] >= 'A' && static_cast<std::size_t>(a[0] - 'A') < b.options.size()) {
      is_letter = true;
    }
    if (!in_options && !is_letter) out.emplace_back("closed answer not among options");
  }
  for (const auto& box : r.boxes) {
    if (auto v = box_violation(box, r.image_size)) out.push_back("box: " + *v);
  }
  if (r.prompts.size() > r.boxes.size()) out.emplace_back("more prompts than boxes");
  for (const auto& p : r.prompts) {
    if (!(p.alpha >= 0.0 && p.alpha <= 1.0)) out.emplace_back("prompt alpha outside [0,1]");
    if (p.thickness < 1) out.emplace_back("prompt thickness < 1");
    if (std::find(r.boxes.begin(), r.boxes.end(), p.source_box) == r.boxes.end()) {
      out.emplace_back("prompt source_box not among boxes");
    }
    const auto& s = p.source_box;
    if (p.shape == Shape::kScribble) {
      for (const auto& pt : p.control_points) {
        if (!s.contains_pixel(pt.x, pt.y)) {
          out.emplace_back("scribble control point outside source_box");
          break;
        }
      }
    } else {
      const auto& g = p.geometry_box;
      if (g.x_min < s.x_min || g.y_min < s.y_min || g.x_max > s.x_max || g.y_max > s.y_max) {
        out.emplace_back("prompt geometry outside source_box");
      }
    }
  }
  return out;
}

}  // namespace medvp
