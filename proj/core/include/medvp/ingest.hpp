#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "medvp/csv.hpp"
#include "medvp/manifest.hpp"

namespace medvp {

/// Source field names of one dataset layout.
struct FieldMap {
  std::string_view id;
  std::string_view image;
  std::string_view question;
  std::string_view answer;
  std::string_view answer_type;
  std::string_view lang;
  std::string_view split;
  std::vector<std::string_view> options;
  std::string_view answer_letter;
};

/// Field table for slake, vqa_rad and pmc_vqa. Throws Error for generic.
const FieldMap& field_map(DatasetKind kind);

/// An entry that cannot be turned into a record (missing field, answer that
/// matches no option, ...). Rejected entries are reported, not fatal.
class RejectedEntry : public Error {
 public:
  using Error::Error;
};

/// "OPEN"/"CLOSED" in any case and with stray whitespace; anything else
/// throws Error, which aborts the ingest.
AnswerType source_answer_type(std::string_view value);

/// Converters for a single source entry. image_path is relative to the
/// dataset root; missing_image is left unset.
VQARecord slake_record(const Json& entry);
VQARecord vqa_rad_record(const Json& entry, std::string_view image_dir);
VQARecord pmc_vqa_record(const CsvTable& table, std::size_t row, Split split, std::string_view image_dir);

/// "A: text", "A:text", "(A) text" -> "text".
std::string strip_option_prefix(std::string_view option);

struct IngestOptions {
  /// Keep only records with this language tag (SLAKE); empty keeps all.
  std::string lang;
  /// Read image headers to fill image_size.
  bool read_image_sizes = true;
  std::size_t workers = 1;
};

struct IngestReject {
  std::string source;
  std::size_t entry = 0;
  std::string reason;
};

struct IngestResult {
  Manifest manifest;
  std::size_t source_entries = 0;
  std::vector<IngestReject> rejects;
};

/// Reads one split of a dataset into an `ingested` manifest sorted by id.
/// Layouts under `root`:
///   slake    <split>.json with images under imgs/
///   vqa_rad  trainset.json / testset.json, or the public JSON release split
///            on phrase_type; images under "VQA_RAD Image Folder/" or images/
///   pmc_vqa  train.csv / test.csv (or train_2.csv / test_clean.csv); images
///            under images/ or figures/
///   generic  a manifest file, or <split>.jsonl / manifest.jsonl in root
/// Records whose image file is absent are kept with missing_image set.
/// Every source entry is either a record or a reject. Throws Error when
/// nothing is found or an answer type is unknown.
IngestResult ingest(DatasetKind kind, const std::filesystem::path& root, Split split, const IngestOptions& opts = {});

Json ingest_summary_to_json(const IngestResult& result);

struct ValidationReport {
  Stage stage = Stage::kIngested;
  std::size_t records = 0;
  std::size_t images = 0;
  std::size_t open = 0;
  std::size_t closed = 0;
  std::size_t missing_images = 0;
  std::vector<std::string> missing_files;
  /// (record id, violation)
  std::vector<std::pair<std::string, std::string>> violations;

  [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Counts records, distinct images, the open/closed split and missing
/// files (source images and rendered images), and lists invariant
/// violations including duplicate ids. File checks are skipped when
/// `check_files` is false.
ValidationReport validate(const Manifest& manifest, bool check_files = true);

Json validation_report_to_json(const ValidationReport& report);

}  // namespace medvp
