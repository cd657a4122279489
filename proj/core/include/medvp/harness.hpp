#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "medvp/adapt.hpp"
#include "medvp/manifest.hpp"
#include "medvp/render.hpp"

namespace medvp {

/// Shared settings for the ablation transforms.
struct HarnessContext {
  InstructionTemplates templates = InstructionTemplates::defaults();
  /// Where re-composited images go. When empty, records whose prompt set
  /// changed keep their old image path and are flagged "image_stale".
  std::filesystem::path out_dir;
};

/// floor(keep_ratio * n), with a 1e-9 relative tolerance so that decimal
/// ratios such as 0.29 do not lose a prompt to binary rounding.
std::size_t retained_count(double keep_ratio, std::size_t n);

/// Keeps exactly retained_count(keep_ratio, N) of the N prompts pooled
/// across all records, chosen by a Fisher-Yates shuffle seeded with `seed`.
/// Records left without prompts get the original image and the no-prompt
/// instruction. Throws Error unless 0 < keep_ratio <= 1.
Manifest dropout_sample(const Manifest& manifest, double keep_ratio, std::uint64_t seed, const HarnessContext& ctx);

/// Re-draws every prompt from its source box and original seed with the
/// shape forced to `shape`; nullopt ("mix") re-draws from `spec.shapes`,
/// which reproduces the original render when `spec` and `master_seed` match.
Manifest restrict_shape(const Manifest& manifest, std::optional<Shape> shape, std::uint64_t master_seed,
                        const ShapeSpec& spec, const HarnessContext& ctx);

/// Removes all prompts: images revert to the originals and instructions to
/// the no-prompt template. Boxes are kept. Idempotent.
Manifest strip_prompts(const Manifest& manifest, const InstructionTemplates& templates);

struct Prediction {
  std::string id;
  std::string answer;
};

/// JSONL, one {"id": ..., "answer": ...} object per line ("text" or
/// "prediction" are accepted in place of "answer").
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

/// Token-set recall of `ground_truth` in `prediction`: the fraction of
/// distinct lowercase alphanumeric tokens of the ground truth that occur in
/// the prediction. A ground truth without tokens scores 1 when the
/// prediction has none either, else 0.
double token_recall(std::string_view ground_truth, std::string_view prediction);

/// Option letter at the start of a multiple-choice answer ("B", "b.",
/// "(C)", "D: text"), or nullopt.
std::optional<char> leading_option_letter(std::string_view prediction);

/// Closed-question correctness: normalized exact match; for multiple-choice
/// records an option letter or the option text is accepted.
bool closed_match(const VQARecord& reference, std::string_view prediction);

struct ScoreRow {
  std::string id;
  AnswerType answer_type = AnswerType::kOpen;
  std::string reference;
  std::string prediction;
  double value = 0.0;
  bool missing = false;
};

struct ScoreReport {
  std::string condition;
  std::optional<double> keep_ratio;
  std::optional<std::string> shape;
  double open_recall = 0.0;
  double closed_accuracy = 0.0;
  std::size_t open_count = 0;
  std::size_t closed_count = 0;
  std::vector<std::string> missing;
  std::vector<ScoreRow> rows;
};

/// Scores predictions against the reference answers. Open records use
/// token_recall, closed records closed_match; each aggregate is the mean
/// over its class. Rows follow reference order. Records without a
/// prediction score 0 and are listed in `missing`. Throws Error for
/// duplicate or unknown prediction ids.
ScoreReport score(const std::vector<Prediction>& predictions, const Manifest& reference);

Json score_report_to_json(const ScoreReport& report);
ScoreReport score_report_from_json(const Json& j);

struct AblationRow {
  std::string condition;
  std::optional<double> keep_ratio;
  double open = 0.0;
  double closed = 0.0;
  double delta_open = 0.0;
  double delta_closed = 0.0;
};

struct AblationTable {
  std::string baseline;
  std::vector<AblationRow> rows;
};

/// Lines reports up against the first one (the baseline). Rows are ordered
/// by keep_ratio when every report carries one, else kept in input order.
/// Throws Error with fewer than two reports.
AblationTable compare(const std::vector<ScoreReport>& reports);

std::string ablation_markdown(const AblationTable& table);
Json ablation_to_json(const AblationTable& table);

}  // namespace medvp
