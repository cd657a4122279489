#include "medvp/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "medvp/image.hpp"
#include "medvp/parallel.hpp"
#include "medvp/text.hpp"

namespace medvp {

namespace fs = std::filesystem;

namespace {

const FieldMap kSlake{"qid", "img_name", "question", "answer", "answer_type", "q_lang", "", {}, ""};
const FieldMap kVqaRad{"qid", "image_name", "question", "answer", "answer_type", "", "phrase_type", {}, ""};
const FieldMap kPmcVqa{"",       "Figure_path", "Question", "Answer", "", "", "",
                       {"Choice A", "Choice B", "Choice C", "Choice D"}, "Answer_label"};

std::string padded(long long n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld", n);
  return buf;
}

// Scalars as text: some releases store numeric answers and ids as numbers.
std::string scalar_text(const Json& entry, std::string_view key) {
  auto it = entry.find(std::string(key));
  if (it == entry.end() || it->is_null()) throw RejectedEntry("missing field '" + std::string(key) + "'");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  if (it->is_number() || it->is_boolean()) return it->dump();
  throw RejectedEntry("field '" + std::string(key) + "' is not a scalar");
}

std::string id_part(const Json& entry, std::string_view key) {
  auto it = entry.find(std::string(key));
  if (it != entry.end() && it->is_number_integer()) return padded(it->get<long long>());
  std::string s = trim(scalar_text(entry, key));
  if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }) && s.size() <= 12) {
    return padded(std::stoll(s));
  }
  return s;
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::optional<fs::path> first_existing(const fs::path& root, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (fs::is_regular_file(root / n)) return root / n;
  }
  return std::nullopt;
}

std::string image_dir(const fs::path& root, std::initializer_list<const char*> candidates) {
  for (const char* c : candidates) {
    if (fs::is_directory(root / c)) return c;
  }
  return "";
}

std::string under(std::string_view dir, std::string_view name) {
  if (dir.empty()) return std::string(name);
  return (fs::path(dir) / fs::path(name)).generic_string();
}

struct Collected {
  std::vector<VQARecord> records;
  std::size_t entries = 0;
  std::vector<IngestReject> rejects;
};

template <typename Convert>
void collect_json_array(const Json& array, const std::string& source, Collected& out, Convert&& convert) {
  if (!array.is_array()) throw Error(source + ": expected a JSON array of entries");
  std::size_t index = 0;
  for (const auto& entry : array) {
    ++index;
    std::optional<VQARecord> rec;
    try {
      rec = convert(entry);
    } catch (const RejectedEntry& e) {
      out.rejects.push_back({source, index, e.what()});
      ++out.entries;
      continue;
    }
    if (!rec) continue;  // belongs to another split
    ++out.entries;
    out.records.push_back(std::move(*rec));
  }
}

Collected collect_slake(const fs::path& root, Split split) {
  Collected out;
  const auto file = first_existing(root, {split == Split::kTrain ? "train.json" : "test.json"});
  if (!file) return out;
  collect_json_array(read_json_file(*file), file->filename().string(), out,
                     [](const Json& e) { return std::optional<VQARecord>(slake_record(e)); });
  return out;
}

Collected collect_vqa_rad(const fs::path& root, Split split) {
  Collected out;
  const std::string dir = image_dir(root, {"VQA_RAD Image Folder", "images"});
  if (auto file = first_existing(root, {split == Split::kTrain ? "trainset.json" : "testset.json"})) {
    collect_json_array(read_json_file(*file), file->filename().string(), out,
                       [&](const Json& e) { return std::optional<VQARecord>(vqa_rad_record(e, dir)); });
    return out;
  }
  auto file = first_existing(root, {"VQA_RAD Dataset Public.json", "vqa_rad.json"});
  if (!file) return out;
  const std::string split_key(kVqaRad.split);
  collect_json_array(read_json_file(*file), file->filename().string(), out, [&](const Json& e) {
    std::string phrase;
    if (auto it = e.find(split_key); it != e.end() && it->is_string()) phrase = to_lower(it->get<std::string>());
    const bool is_test = starts_with_ci(phrase, "test");
    if (is_test != (split == Split::kTest)) return std::optional<VQARecord>();
    return std::optional<VQARecord>(vqa_rad_record(e, dir));
  });
  return out;
}

Collected collect_pmc_vqa(const fs::path& root, Split split) {
  Collected out;
  const auto file = split == Split::kTrain ? first_existing(root, {"train.csv", "train_2.csv"})
                                           : first_existing(root, {"test.csv", "test_clean.csv"});
  if (!file) return out;
  const CsvTable table = read_csv(*file);
  const std::string dir = image_dir(root, {"images", "figures"});
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    ++out.entries;
    try {
      out.records.push_back(pmc_vqa_record(table, r, split, dir));
    } catch (const RejectedEntry& e) {
      out.rejects.push_back({file->filename().string(), r + 1, e.what()});
    }
  }
  return out;
}

Collected collect_generic(const fs::path& root, Split split) {
  Collected out;
  fs::path file = root;
  if (fs::is_directory(root)) {
    auto found = first_existing(root, {split == Split::kTrain ? "train.jsonl" : "test.jsonl", "manifest.jsonl"});
    if (!found) return out;
    file = *found;
  }
  const Manifest m = read_manifest(file);
  for (const auto& r : m.records) {
    ++out.entries;
    VQARecord base = r.base;
    base.missing_image = false;
    out.records.push_back(std::move(base));
  }
  return out;
}

}  // namespace

const FieldMap& field_map(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kSlake:
      return kSlake;
    case DatasetKind::kVqaRad:
      return kVqaRad;
    case DatasetKind::kPmcVqa:
      return kPmcVqa;
    case DatasetKind::kGeneric:
      break;
  }
  throw Error("the generic layout has no field table");
}

AnswerType source_answer_type(std::string_view value) {
  const std::string v = to_lower(trim(value));
  if (v == "open") return AnswerType::kOpen;
  if (v == "closed") return AnswerType::kClosed;
  throw Error("unknown answer type '" + std::string(value) + "'");
}

VQARecord slake_record(const Json& entry) {
  const FieldMap& f = kSlake;
  VQARecord r;
  r.dataset = DatasetKind::kSlake;
  r.id = "slake-" + id_part(entry, f.id);
  r.image_path = under("imgs", scalar_text(entry, f.image));
  r.question = scalar_text(entry, f.question);
  r.answer = trim(scalar_text(entry, f.answer));
  r.answer_type = source_answer_type(scalar_text(entry, f.answer_type));
  if (auto it = entry.find(std::string(f.lang)); it != entry.end() && it->is_string()) r.lang = it->get<std::string>();
  return r;
}

VQARecord vqa_rad_record(const Json& entry, std::string_view image_dir) {
  const FieldMap& f = kVqaRad;
  VQARecord r;
  r.dataset = DatasetKind::kVqaRad;
  r.id = "vqa_rad-" + id_part(entry, f.id);
  r.image_path = under(image_dir, trim(scalar_text(entry, f.image)));
  r.question = scalar_text(entry, f.question);
  r.answer = trim(scalar_text(entry, f.answer));
  r.answer_type = source_answer_type(scalar_text(entry, f.answer_type));
  r.lang = "en";
  return r;
}

std::string strip_option_prefix(std::string_view option) {
  std::string s = trim(option);
  std::size_t i = 0;
  const bool paren = !s.empty() && s[0] == '(';
  if (paren) ++i;
  if (i < s.size() && s[i] >= 'A' && s[i] <= 'Z') {
    std::size_t j = i + 1;
    if (paren && j < s.size() && s[j] == ')') return trim(std::string_view(s).substr(j + 1));
    if (!paren && j < s.size() && (s[j] == ':' || s[j] == '.')) return trim(std::string_view(s).substr(j + 1));
  }
  return s;
}

VQARecord pmc_vqa_record(const CsvTable& table, std::size_t row, Split split, std::string_view image_dir) {
  const FieldMap& f = kPmcVqa;
  const auto& cells = table.rows.at(row);
  auto cell = [&](std::string_view name) -> std::string {
    auto col = table.column(name);
    if (!col) throw Error("PMC-VQA CSV lacks column '" + std::string(name) + "'");
    if (*col >= cells.size()) throw RejectedEntry("row has too few columns");
    return cells[*col];
  };
  VQARecord r;
  r.dataset = DatasetKind::kPmcVqa;
  r.id = "pmc_vqa-" + std::string(to_string(split)) + "-" + padded(static_cast<long long>(row + 1));
  r.image_path = under(image_dir, trim(cell(f.image)));
  r.question = trim(cell(f.question));
  r.answer_type = AnswerType::kClosed;
  r.lang = "en";
  for (auto name : f.options) r.options.push_back(strip_option_prefix(cell(name)));
  if (r.question.empty()) throw RejectedEntry("empty question");

  std::string letter;
  if (table.column(f.answer_letter)) letter = to_upper(trim(cell(f.answer_letter)));
  if (letter.size() == 1 && letter[0] >= 'A' && static_cast<std::size_t>(letter[0] - 'A') < r.options.size()) {
    r.answer = r.options[static_cast<std::size_t>(letter[0] - 'A')];
    r.answer_letter = letter;
    return r;
  }
  const std::string answer = normalize_answer(strip_option_prefix(cell(f.answer)));
  for (std::size_t i = 0; i < r.options.size(); ++i) {
    if (normalize_answer(r.options[i]) == answer) {
      r.answer = r.options[i];
      r.answer_letter = std::string(1, static_cast<char>('A' + i));
      return r;
    }
  }
  throw RejectedEntry("answer matches no option");
}

IngestResult ingest(DatasetKind kind, const fs::path& root, Split split, const IngestOptions& opts) {
  if (!fs::exists(root)) throw Error("dataset root not found: " + root.string());
  Collected c;
  switch (kind) {
    case DatasetKind::kSlake:
      c = collect_slake(root, split);
      break;
    case DatasetKind::kVqaRad:
      c = collect_vqa_rad(root, split);
      break;
    case DatasetKind::kPmcVqa:
      c = collect_pmc_vqa(root, split);
      break;
    case DatasetKind::kGeneric:
      c = collect_generic(root, split);
      break;
  }

  IngestResult result;
  result.source_entries = c.entries;
  result.rejects = std::move(c.rejects);
  std::set<std::string> seen;
  std::vector<VQARecord> kept;
  for (auto& r : c.records) {
    if (!opts.lang.empty() && r.lang != opts.lang) {
      result.rejects.push_back({std::string(to_string(kind)), 0, "record " + r.id + " has language '" + r.lang + "'"});
      continue;
    }
    if (!seen.insert(r.id).second) {
      result.rejects.push_back({std::string(to_string(kind)), 0, "duplicate id " + r.id});
      continue;
    }
    kept.push_back(std::move(r));
  }
  if (kept.empty()) throw Error("no records found under " + root.string());
  std::sort(kept.begin(), kept.end(), [](const VQARecord& a, const VQARecord& b) { return a.id < b.id; });

  const fs::path image_root = fs::is_directory(root) ? root : root.parent_path();
  std::vector<PromptedRecord> records(kept.size());
  parallel_for(kept.size(), opts.workers, [&](std::size_t i) {
    PromptedRecord& rec = records[i];
    rec.base = std::move(kept[i]);
    const fs::path image = image_root / rec.base.image_path;
    rec.base.missing_image = !fs::is_regular_file(image);
    if (!rec.base.missing_image && opts.read_image_sizes) {
      try {
        rec.image_size = read_image_size(image);
      } catch (const Error&) {
        rec.image_size = {};
      }
    }
  });

  Manifest& m = result.manifest;
  m.header.stage = Stage::kIngested;
  m.header.image_root = image_root.lexically_normal().generic_string();
  m.header.config = {{"dataset", std::string(to_string(kind))}, {"split", std::string(to_string(split))}};
  if (!opts.lang.empty()) m.header.config["lang"] = opts.lang;
  m.records = std::move(records);
  return result;
}

Json ingest_summary_to_json(const IngestResult& r) {
  std::size_t missing = 0;
  for (const auto& rec : r.manifest.records) missing += rec.base.missing_image ? 1 : 0;
  Json rejects = Json::array();
  for (const auto& rj : r.rejects) rejects.push_back({{"source", rj.source}, {"entry", rj.entry}, {"reason", rj.reason}});
  return {{"source_entries", r.source_entries},
          {"records", r.manifest.records.size()},
          {"missing_images", missing},
          {"rejected", r.rejects.size()},
          {"rejects", std::move(rejects)}};
}

ValidationReport validate(const Manifest& m, bool check_files) {
  ValidationReport report;
  report.stage = m.stage();
  report.records = m.records.size();
  std::set<std::string> images;
  std::set<std::string> ids;
  const fs::path root = m.header.image_root;
  for (const auto& r : m.records) {
    images.insert(r.base.image_path);
    (r.base.answer_type == AnswerType::kOpen ? report.open : report.closed)++;
    if (!ids.insert(r.base.id).second) report.violations.emplace_back(r.base.id, "duplicate id");
    for (auto& v : record_violations(r)) report.violations.emplace_back(r.base.id, std::move(v));
    bool missing = r.base.missing_image;
    if (check_files && !missing && !fs::is_regular_file(root / r.base.image_path)) {
      missing = true;
      report.missing_files.push_back((root / r.base.image_path).generic_string());
    }
    report.missing_images += missing ? 1 : 0;
    if (check_files && !r.prompted_image_path.empty() && !fs::is_regular_file(r.prompted_image_path)) {
      report.missing_files.push_back(r.prompted_image_path);
    }
  }
  report.images = images.size();
  return report;
}

Json validation_report_to_json(const ValidationReport& r) {
  Json violations = Json::array();
  for (const auto& [id, v] : r.violations) violations.push_back({{"id", id}, {"violation", v}});
  return {{"stage", std::string(to_string(r.stage))},
          {"records", r.records},
          {"images", r.images},
          {"open", r.open},
          {"closed", r.closed},
          {"missing_images", r.missing_images},
          {"missing_files", r.missing_files},
          {"violations", std::move(violations)},
          {"ok", r.ok()}};
}

}  // namespace medvp
