#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "medvp/types.hpp"

namespace medvp {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Raised for malformed manifests. `line()` is 1-based, 0 when the error is
/// not tied to a line.
class ManifestError : public Error {
 public:
  ManifestError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ManifestHeader {
  Stage stage = Stage::kIngested;
  std::uint64_t master_seed = 0;
  std::string tool_version = MEDVP_VERSION;
  /// Directory that base.image_path values are relative to.
  std::string image_root;
  /// Full pipeline configuration at the time the manifest was written.
  Json config = Json::object();
  /// Ablation provenance (keep ratio, forced shape, ...), empty if none.
  Json harness = Json::object();
  friend bool operator==(const ManifestHeader&, const ManifestHeader&) = default;
};

/// An ordered collection of records at one pipeline stage.
struct Manifest {
  ManifestHeader header;
  std::vector<PromptedRecord> records;

  [[nodiscard]] Stage stage() const { return header.stage; }
  /// Index of the record with `id`, or nullopt.
  [[nodiscard]] std::optional<std::size_t> find(std::string_view id) const;
};

struct ReadOptions {
  /// Reject records that violate type invariants. Duplicate ids are
  /// rejected only when this is set.
  bool check_invariants = true;
};

Json record_to_json(const PromptedRecord& r);
PromptedRecord record_from_json(const Json& j);
Json header_to_json(const ManifestHeader& h);
ManifestHeader header_from_json(const Json& j);
Json box_to_json(const BoundingBox& b);
BoundingBox box_from_json(const Json& j);

/// Reads a JSONL manifest. The first line is a header when it carries
/// `schema_version`; otherwise every line is a record and the header takes
/// defaults. Blank lines are skipped.
Manifest read_manifest(const std::filesystem::path& path, const ReadOptions& opts = {});
Manifest parse_manifest(std::istream& in, const ReadOptions& opts = {});

/// Writes the header line then one compact JSON object per record with a
/// fixed field order, so write(read(f)) reproduces f byte for byte.
/// The file is written to a temporary sibling and renamed into place.
void write_manifest(const Manifest& m, const std::filesystem::path& path);
void write_manifest(const Manifest& m, std::ostream& out);

/// Line-at-a-time reader for manifests too large to hold in memory.
class ManifestReader {
 public:
  explicit ManifestReader(const std::filesystem::path& path, ReadOptions opts = {});
  explicit ManifestReader(std::istream& in, ReadOptions opts = {});
  [[nodiscard]] const ManifestHeader& header() const { return header_; }
  /// Next record, or nullopt at end of file.
  std::optional<PromptedRecord> next();

 private:
  void read_header();
  std::optional<std::string> next_line();

  std::ifstream file_;
  std::istream* in_ = nullptr;
  ReadOptions opts_;
  ManifestHeader header_;
  std::optional<std::string> pending_;
  std::size_t line_no_ = 0;
  std::size_t pending_line_ = 0;
  std::unordered_set<std::string> seen_ids_;
};

}  // namespace medvp
