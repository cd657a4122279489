#include "medvp/adapt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "medvp/builtin_data.hpp"
#include "medvp/text.hpp"

namespace medvp {

namespace fs = std::filesystem;

namespace {

struct TemplateField {
  const char* name;
  std::string InstructionTemplates::*member;
};

constexpr TemplateField kFields[] = {
    {"VERSION", &InstructionTemplates::version},
    {"marker", &InstructionTemplates::marker},
    {"prompted_open", &InstructionTemplates::prompted_open},
    {"prompted_closed", &InstructionTemplates::prompted_closed},
    {"prompted_choice", &InstructionTemplates::prompted_choice},
    {"plain_open", &InstructionTemplates::plain_open},
    {"plain_closed", &InstructionTemplates::plain_closed},
    {"plain_choice", &InstructionTemplates::plain_choice},
};

std::string strip_trailing_newline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

bool contains_phrase(const std::vector<std::string>& tokens, std::initializer_list<std::string_view> phrase) {
  const std::size_t n = phrase.size();
  if (tokens.size() < n) return false;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::size_t k = 0;
    for (auto word : phrase) {
      if (tokens[i + k] != word) break;
      ++k;
    }
    if (k == n) return true;
  }
  return false;
}

bool has_token(const std::vector<std::string>& tokens, std::string_view word) {
  return std::find(tokens.begin(), tokens.end(), word) != tokens.end();
}

bool is_count_question(const std::vector<std::string>& t) {
  return contains_phrase(t, {"how", "many"}) || contains_phrase(t, {"number", "of"});
}

bool is_existence_question(const std::string& question, const std::vector<std::string>& t) {
  if (contains_phrase(t, {"is", "there"}) || contains_phrase(t, {"are", "there"})) return true;
  // "does/do ... contain"
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == "does" || t[i] == "do") {
      for (std::size_t j = i + 1; j < t.size(); ++j) {
        if (t[j] == "contain" || t[j] == "contains") return true;
      }
    }
  }
  const std::string q = trim(question);
  return has_token(t, "any") && !q.empty() && q.back() == '?';
}

bool mentions_side(const std::vector<std::string>& t) { return has_token(t, "left") || has_token(t, "right"); }

}  // namespace

InstructionTemplates InstructionTemplates::defaults() {
  InstructionTemplates t;
  for (const auto& f : kFields) t.*(f.member) = strip_trailing_newline(std::string(builtin::template_text(f.name)));
  return t;
}

InstructionTemplates InstructionTemplates::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("template directory not found: " + dir.string());
  InstructionTemplates t = defaults();
  for (const auto& f : kFields) {
    const fs::path file = dir / (std::string(f.name) + ".txt");
    if (!fs::exists(file)) continue;
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot read template " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    t.*(f.member) = strip_trailing_newline(ss.str());
  }
  return t;
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() * 2);
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const char c = tmpl[i];
    if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
      out += '{';
      ++i;
    } else if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
      out += '}';
      ++i;
    } else if (c == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close == std::string_view::npos) throw Error("unterminated slot in template");
      const std::string name(tmpl.substr(i + 1, close - i - 1));
      auto it = values.find(name);
      if (it == values.end()) throw Error("unresolvable template slot {" + name + "}");
      out += it->second;
      i = close;
    } else {
      out += c;
    }
  }
  return out;
}

std::string describe_markers(const std::vector<VisualPrompt>& prompts, const InstructionTemplates& templates) {
  std::vector<std::string> parts;
  for (const auto& p : prompts) {
    parts.push_back(fill_template(templates.marker, {{"color", p.color.name}, {"shape", std::string(to_string(p.shape))}}));
  }
  if (parts.empty()) return {};
  if (parts.size() == 1) return parts.front();
  std::string last = parts.back();
  parts.pop_back();
  return join(parts, ", ") + " and " + last;
}

std::string format_options(const std::vector<std::string>& options) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < options.size() && i < 26; ++i) {
    lines.push_back(std::string(1, static_cast<char>('A' + i)) + ". " + options[i]);
  }
  return join(lines, "\n");
}

std::string adapt_text(const PromptedRecord& record, const InstructionTemplates& templates) {
  const auto& b = record.base;
  const bool choice = !b.options.empty();
  const bool prompted = !record.prompts.empty();
  const std::string* tmpl = nullptr;
  if (prompted) {
    tmpl = choice ? &templates.prompted_choice
                  : (b.answer_type == AnswerType::kClosed ? &templates.prompted_closed : &templates.prompted_open);
  } else {
    tmpl = choice ? &templates.plain_choice
                  : (b.answer_type == AnswerType::kClosed ? &templates.plain_closed : &templates.plain_open);
  }
  if (tmpl->find("{question}") == std::string::npos) throw Error("template has no {question} slot");
  std::map<std::string, std::string> values = {{"question", b.question}, {"options", format_options(b.options)}};
  if (prompted) values["markers"] = describe_markers(record.prompts, templates);
  return fill_template(*tmpl, values);
}

std::vector<std::string> marker_vocabulary() {
  std::vector<std::string> words;
  for (const auto& c : default_palette()) words.push_back(c.name);
  for (Shape s : kAllShapes) words.emplace_back(to_string(s));
  return words;
}

Manifest adapt_manifest(const Manifest& rendered, const InstructionTemplates& templates) {
  if (rendered.stage() != Stage::kRendered) {
    throw Error("adapt expects a 'rendered' manifest, got '" + std::string(to_string(rendered.stage())) + "'");
  }
  Manifest out = rendered;
  out.header.stage = Stage::kAdapted;
  out.header.config["templates_version"] = templates.version;
  for (auto& r : out.records) {
    if (r.has_flag("render_failed")) continue;
    r.instruction_text = adapt_text(r, templates);
  }
  return out;
}

std::string_view to_string(LintCategory c) {
  switch (c) {
    case LintCategory::kTinyPrompt:
      return "TINY_PROMPT";
    case LintCategory::kCountQuestion:
      return "COUNT_QUESTION";
    case LintCategory::kExistenceQuestion:
      return "EXISTENCE_QUESTION";
    case LintCategory::kLaterality:
      return "LATERALITY";
  }
  return "?";
}

std::vector<LintWarning> lint(const PromptedRecord& record, const LintConfig& config) {
  std::vector<LintWarning> out;
  const auto& id = record.base.id;
  const auto tokens = alnum_tokens(record.base.question);

  const long long image_area = static_cast<long long>(record.image_size.width) * record.image_size.height;
  if (image_area > 0) {
    for (const auto& p : record.prompts) {
      const BoundingBox& g = p.shape == Shape::kScribble ? p.source_box : p.geometry_box;
      const double ratio = static_cast<double>(g.area()) / static_cast<double>(image_area);
      if (ratio < config.tiny_area_ratio) {
        out.push_back({id, LintCategory::kTinyPrompt,
                       std::to_string(g.width()) + "x" + std::to_string(g.height()) + " " +
                           std::string(to_string(p.shape)) + " covers less than " +
                           std::to_string(config.tiny_area_ratio * 100.0) + "% of the image"});
        break;
      }
    }
  }
  if (is_count_question(tokens)) {
    out.push_back({id, LintCategory::kCountQuestion,
                   "counting question with " + std::to_string(record.prompts.size()) + " marker(s)"});
  }
  if (!record.prompts.empty() && is_existence_question(record.base.question, tokens)) {
    out.push_back({id, LintCategory::kExistenceQuestion, "existence question asked with a marker present"});
  }
  bool side = mentions_side(tokens);
  for (const auto& e : record.entities) side = side || mentions_side(alnum_tokens(e));
  if (side) out.push_back({id, LintCategory::kLaterality, "question or entity refers to left/right"});
  return out;
}

Json lint_report_to_json(const std::vector<LintWarning>& warnings, std::size_t records) {
  Json j;
  j["records"] = records;
  Json counts = Json::object();
  for (auto c : {LintCategory::kTinyPrompt, LintCategory::kCountQuestion, LintCategory::kExistenceQuestion,
                 LintCategory::kLaterality}) {
    counts[std::string(to_string(c))] = 0;
  }
  Json list = Json::array();
  for (const auto& w : warnings) {
    counts[std::string(to_string(w.category))] = counts[std::string(to_string(w.category))].get<int>() + 1;
    list.push_back({{"id", w.record_id}, {"category", std::string(to_string(w.category))}, {"message", w.message}});
  }
  j["counts"] = std::move(counts);
  j["warnings"] = std::move(list);
  return j;
}

}  // namespace medvp
