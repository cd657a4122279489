#include "medvp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "medvp/seed.hpp"
#include "medvp/text.hpp"

namespace medvp {

namespace fs = std::filesystem;

namespace {

// Image and text follow the record's current prompt set.
void refresh_record(PromptedRecord& r, const Manifest& m, const HarnessContext& ctx) {
  const fs::path root = m.header.image_root;
  if (r.prompts.empty()) {
    r.prompted_image_path = original_image_path(r, root).generic_string();
  } else if (!ctx.out_dir.empty()) {
    r = recomposite_record(r, root, ctx.out_dir);
  } else {
    r.add_flag("image_stale");
  }
  if (m.stage() == Stage::kAdapted || r.prompts.empty()) r.instruction_text = adapt_text(r, ctx.templates);
}

std::string format_fixed(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

std::size_t retained_count(double keep_ratio, std::size_t n) {
  // 0.7 * 10 is 7.000000000000001 and 0.29 * 100 is 28.999999999999996; absorb
  // that representation error before flooring.
  const double x = keep_ratio * static_cast<double>(n);
  const auto k = static_cast<std::size_t>(std::floor(x + 1e-9 * std::max(1.0, x)));
  return std::min(k, n);
}

Manifest dropout_sample(const Manifest& manifest, double keep_ratio, std::uint64_t seed, const HarnessContext& ctx) {
  if (!(keep_ratio > 0.0 && keep_ratio <= 1.0)) throw Error("keep ratio must be in (0, 1]");
  struct Slot {
    std::size_t record;
    std::size_t prompt;
  };
  std::vector<Slot> pool;
  for (std::size_t r = 0; r < manifest.records.size(); ++r) {
    for (std::size_t p = 0; p < manifest.records[r].prompts.size(); ++p) pool.push_back({r, p});
  }
  const std::size_t keep = retained_count(keep_ratio, pool.size());

  Manifest out = manifest;
  out.header.harness["keep_ratio"] = keep_ratio;
  out.header.harness["dropout_seed"] = seed;
  if (keep == pool.size()) return out;

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<bool>> kept(manifest.records.size());
  for (std::size_t r = 0; r < kept.size(); ++r) kept[r].assign(manifest.records[r].prompts.size(), false);
  for (std::size_t i = 0; i < keep; ++i) kept[pool[order[i]].record][pool[order[i]].prompt] = true;

  for (std::size_t r = 0; r < out.records.size(); ++r) {
    auto& rec = out.records[r];
    if (std::all_of(kept[r].begin(), kept[r].end(), [](bool k) { return k; })) continue;
    std::vector<VisualPrompt> remaining;
    for (std::size_t p = 0; p < rec.prompts.size(); ++p) {
      if (kept[r][p]) remaining.push_back(rec.prompts[p]);
    }
    rec.prompts = std::move(remaining);
    refresh_record(rec, out, ctx);
  }
  return out;
}

Manifest restrict_shape(const Manifest& manifest, std::optional<Shape> shape, std::uint64_t master_seed,
                        const ShapeSpec& spec, const HarnessContext& ctx) {
  ShapeSpec forced = spec;
  if (shape) forced.shapes = {*shape};
  Manifest out = manifest;
  out.header.harness["shape"] = shape ? std::string(to_string(*shape)) : std::string("mix");
  for (auto& rec : out.records) {
    if (rec.prompts.empty()) continue;
    const std::uint64_t record_seed = derive_seed(master_seed, rec.base.id);
    std::vector<bool> used(rec.boxes.size(), false);
    for (auto& p : rec.prompts) {
      std::size_t index = rec.boxes.size();
      for (std::size_t j = 0; j < rec.boxes.size(); ++j) {
        if (!used[j] && rec.boxes[j] == p.source_box) {
          index = j;
          break;
        }
      }
      if (index == rec.boxes.size()) {
        throw Error("record '" + rec.base.id + "': prompt source box is not among its boxes");
      }
      used[index] = true;
      p = sample_prompt(p.source_box, prompt_seed(record_seed, index), forced, rec.image_size);
    }
    refresh_record(rec, out, ctx);
  }
  return out;
}

Manifest strip_prompts(const Manifest& manifest, const InstructionTemplates& templates) {
  Manifest out = manifest;
  out.header.harness["stripped"] = true;
  const fs::path root = manifest.header.image_root;
  for (auto& rec : out.records) {
    rec.prompts.clear();
    rec.prompted_image_path = original_image_path(rec, root).generic_string();
    rec.instruction_text = adapt_text(rec, templates);
    rec.flags.erase(std::remove(rec.flags.begin(), rec.flags.end(), "image_stale"), rec.flags.end());
  }
  return out;
}

std::vector<Prediction> read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open predictions " + path.string());
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const Json j = Json::parse(line);
      Prediction p;
      p.id = j.at("id").get<std::string>();
      for (const char* key : {"answer", "text", "prediction"}) {
        if (j.contains(key)) {
          p.answer = j.at(key).get<std::string>();
          break;
        }
      }
      out.push_back(std::move(p));
    } catch (const Json::exception& e) {
      throw ManifestError(std::string("malformed prediction: ") + e.what(), line_no);
    }
  }
  return out;
}

double token_recall(std::string_view ground_truth, std::string_view prediction) {
  const auto gt = alnum_tokens(ground_truth);
  const auto pred = alnum_tokens(prediction);
  const std::set<std::string> gt_set(gt.begin(), gt.end());
  const std::set<std::string> pred_set(pred.begin(), pred.end());
  if (gt_set.empty()) return pred_set.empty() ? 1.0 : 0.0;
  std::size_t hit = 0;
  for (const auto& t : gt_set) hit += pred_set.count(t);
  return static_cast<double>(hit) / static_cast<double>(gt_set.size());
}

std::optional<char> leading_option_letter(std::string_view prediction) {
  const std::string s = trim(prediction);
  std::size_t i = 0;
  const bool paren = i < s.size() && s[i] == '(';
  if (paren) ++i;
  if (i >= s.size()) return std::nullopt;
  const char c = s[i];
  if (!((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'))) return std::nullopt;
  ++i;
  if (paren) {
    if (i >= s.size() || s[i] != ')') return std::nullopt;
    ++i;
  }
  if (i == s.size() || s[i] == '.' || s[i] == ':' || s[i] == ')' || (paren && (s[i] == ' ' || s[i] == '\t'))) {
    return static_cast<char>(c >= 'a' ? c - 'a' + 'A' : c);
  }
  return std::nullopt;
}

bool closed_match(const VQARecord& reference, std::string_view prediction) {
  const std::string norm_pred = normalize_answer(prediction);
  if (!reference.options.empty()) {
    std::string gt_letter = option_letter_of(reference);
    if (gt_letter.empty()) gt_letter = to_upper(reference.answer_letter);
    if (auto letter = leading_option_letter(prediction)) {
      if (!gt_letter.empty() && gt_letter[0] == *letter) return true;
    }
  }
  return norm_pred == normalize_answer(reference.answer);
}

ScoreReport score(const std::vector<Prediction>& predictions, const Manifest& reference) {
  std::map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.id, &p).second) throw Error("duplicate prediction for id '" + p.id + "'");
  }
  std::set<std::string_view> known;
  for (const auto& rec : reference.records) known.insert(rec.base.id);
  std::vector<std::string> unknown;
  for (const auto& [id, p] : by_id) {
    if (!known.contains(id)) unknown.push_back(id);
  }
  if (!unknown.empty()) throw Error("predictions for unknown ids: " + join(unknown, ", "));

  ScoreReport report;
  if (auto it = reference.header.harness.find("keep_ratio"); it != reference.header.harness.end()) {
    report.keep_ratio = it->get<double>();
  }
  if (auto it = reference.header.harness.find("shape"); it != reference.header.harness.end()) {
    report.shape = it->get<std::string>();
  }
  double open_sum = 0.0;
  double closed_sum = 0.0;
  for (const auto& rec : reference.records) {
    ScoreRow row;
    row.id = rec.base.id;
    row.answer_type = rec.base.answer_type;
    row.reference = rec.base.answer;
    auto it = by_id.find(rec.base.id);
    if (it == by_id.end()) {
      row.missing = true;
      report.missing.push_back(rec.base.id);
    } else {
      row.prediction = it->second->answer;
      row.value = rec.base.answer_type == AnswerType::kOpen ? token_recall(rec.base.answer, row.prediction)
                                                            : (closed_match(rec.base, row.prediction) ? 1.0 : 0.0);
    }
    if (rec.base.answer_type == AnswerType::kOpen) {
      ++report.open_count;
      open_sum += row.value;
    } else {
      ++report.closed_count;
      closed_sum += row.value;
    }
    report.rows.push_back(std::move(row));
  }
  if (report.open_count) report.open_recall = open_sum / static_cast<double>(report.open_count);
  if (report.closed_count) report.closed_accuracy = closed_sum / static_cast<double>(report.closed_count);
  return report;
}

Json score_report_to_json(const ScoreReport& r) {
  Json j;
  j["condition"] = r.condition;
  j["keep_ratio"] = r.keep_ratio ? Json(*r.keep_ratio) : Json(nullptr);
  j["shape"] = r.shape ? Json(*r.shape) : Json(nullptr);
  j["open_recall"] = r.open_recall;
  j["closed_accuracy"] = r.closed_accuracy;
  j["counts"] = {{"open", r.open_count}, {"closed", r.closed_count}, {"missing", r.missing.size()}};
  j["missing"] = r.missing;
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"id", row.id},
                    {"answer_type", std::string(to_string(row.answer_type))},
                    {"reference", row.reference},
                    {"prediction", row.prediction},
                    {"score", row.value},
                    {"missing", row.missing}});
  }
  j["rows"] = std::move(rows);
  return j;
}

ScoreReport score_report_from_json(const Json& j) {
  ScoreReport r;
  try {
    r.condition = j.value("condition", std::string());
    if (j.contains("keep_ratio") && !j.at("keep_ratio").is_null()) r.keep_ratio = j.at("keep_ratio").get<double>();
    if (j.contains("shape") && !j.at("shape").is_null()) r.shape = j.at("shape").get<std::string>();
    r.open_recall = j.at("open_recall").get<double>();
    r.closed_accuracy = j.at("closed_accuracy").get<double>();
    if (j.contains("counts")) {
      r.open_count = j.at("counts").value("open", std::size_t{0});
      r.closed_count = j.at("counts").value("closed", std::size_t{0});
    }
    if (j.contains("missing")) r.missing = j.at("missing").get<std::vector<std::string>>();
    if (j.contains("rows")) {
      for (const auto& row : j.at("rows")) {
        ScoreRow s;
        s.id = row.at("id").get<std::string>();
        s.answer_type = parse_answer_type(row.at("answer_type").get<std::string>());
        s.reference = row.value("reference", std::string());
        s.prediction = row.value("prediction", std::string());
        s.value = row.at("score").get<double>();
        s.missing = row.value("missing", false);
        r.rows.push_back(std::move(s));
      }
    }
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed score report: ") + e.what());
  }
  return r;
}

AblationTable compare(const std::vector<ScoreReport>& reports) {
  if (reports.size() < 2) throw Error("compare needs at least two reports");
  AblationTable table;
  const auto& base = reports.front();
  table.baseline = base.condition;
  for (const auto& r : reports) {
    table.rows.push_back({r.condition, r.keep_ratio, r.open_recall, r.closed_accuracy,
                          r.open_recall - base.open_recall, r.closed_accuracy - base.closed_accuracy});
  }
  const bool all_ratios = std::all_of(reports.begin(), reports.end(), [](const ScoreReport& r) { return r.keep_ratio.has_value(); });
  if (all_ratios) {
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const AblationRow& a, const AblationRow& b) { return *a.keep_ratio < *b.keep_ratio; });
  }
  return table;
}

std::string ablation_markdown(const AblationTable& t) {
  std::string out = "| condition | keep ratio | open | closed | delta open | delta closed |\n";
  out += "|---|---|---|---|---|---|\n";
  for (const auto& r : t.rows) {
    out += "| " + r.condition + " | " + (r.keep_ratio ? format_fixed(*r.keep_ratio, "%.2f") : std::string("-")) +
           " | " + format_fixed(r.open, "%.4f") + " | " + format_fixed(r.closed, "%.4f") + " | " +
           format_fixed(r.delta_open, "%+.4f") + " | " + format_fixed(r.delta_closed, "%+.4f") + " |\n";
  }
  return out;
}

Json ablation_to_json(const AblationTable& t) {
  Json j;
  j["baseline"] = t.baseline;
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"condition", r.condition},
                    {"keep_ratio", r.keep_ratio ? Json(*r.keep_ratio) : Json(nullptr)},
                    {"open", r.open},
                    {"closed", r.closed},
                    {"delta_open", r.delta_open},
                    {"delta_closed", r.delta_closed}});
  }
  j["rows"] = std::move(rows);
  return j;
}

}  // namespace medvp
