#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "medvp/manifest.hpp"
#include "medvp/types.hpp"

namespace medvp {

/// Instruction templates. `marker` describes one prompt with the {color}
/// and {shape} slots; the prompted_* templates use {markers}, {question}
/// and {options}; the plain_* templates (no prompts) use {question} and
/// {options}. Slots are written `{name}`; `{{` and `}}` produce literal
/// braces.
struct InstructionTemplates {
  std::string version;
  std::string marker;
  std::string prompted_open;
  std::string prompted_closed;
  std::string prompted_choice;
  std::string plain_open;
  std::string plain_closed;
  std::string plain_choice;

  /// Templates shipped with the tool.
  static InstructionTemplates defaults();
  /// Reads `<name>.txt` files from `dir`; missing files keep their default.
  /// A single trailing newline is stripped from each file.
  static InstructionTemplates load(const std::filesystem::path& dir);
};

/// Replaces `{slot}` occurrences with values. Throws Error naming the first
/// slot that has no value, or on an unterminated brace.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// "the red rectangle", "the red rectangle and the blue ellipse",
/// "a, b and c".
std::string describe_markers(const std::vector<VisualPrompt>& prompts, const InstructionTemplates& templates);

/// "A. first\nB. second ..."
std::string format_options(const std::vector<std::string>& options);

/// Instruction text for a record: names each marker's color and shape in
/// prompt order, followed by the verbatim question; records without
/// prompts get the plain template. Multiple-choice records have their
/// options appended. Throws Error if the template lacks {question}.
std::string adapt_text(const PromptedRecord& record, const InstructionTemplates& templates);

/// Colors and shapes that may appear in marker descriptions.
std::vector<std::string> marker_vocabulary();

/// Adapts every record of a `rendered` manifest. Throws Error for any other
/// stage, so an adapted manifest is never wrapped twice.
Manifest adapt_manifest(const Manifest& rendered, const InstructionTemplates& templates);

enum class LintCategory { kTinyPrompt, kCountQuestion, kExistenceQuestion, kLaterality };

std::string_view to_string(LintCategory c);

struct LintWarning {
  std::string record_id;
  LintCategory category;
  std::string message;
};

struct LintConfig {
  /// Markers covering less than this fraction of the image are tiny.
  double tiny_area_ratio = 0.001;
};

/// Flags records prone to the known marker failure modes: tiny markers,
/// counting questions, existence questions asked with a marker present and
/// left/right references. At most one warning per category per record.
/// Never modifies the record.
std::vector<LintWarning> lint(const PromptedRecord& record, const LintConfig& config = {});

Json lint_report_to_json(const std::vector<LintWarning>& warnings, std::size_t records);

}  // namespace medvp
