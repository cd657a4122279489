#pragma once

#include <string>
#include <string_view>
#include <vector>

// ASCII text helpers shared by entity extraction, templating and scoring.
// Non-ASCII bytes are passed through untouched and never count as
// alphanumeric.

namespace medvp {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);

/// Lowercase alphanumeric runs, in order. "X-ray of the Left lung" ->
/// {"x", "ray", "of", "the", "left", "lung"}.
std::vector<std::string> alnum_tokens(std::string_view s);

/// Singular form of one lowercase word via a small suffix-rule table
/// ("kidneys" -> "kidney", "arteries" -> "artery", "masses" -> "mass").
/// Words ending in -ss, -us, -is, -as and a short exception list are kept.
std::string singularize(std::string_view word);

/// Entity canonical form: trimmed, lowercased, internal whitespace
/// collapsed, last word singularized.
std::string canonical_entity(std::string_view s);

/// Answer normalization used by closed-question scoring: lowercase,
/// punctuation replaced by spaces, articles (a, an, the) removed,
/// whitespace collapsed.
std::string normalize_answer(std::string_view s);

/// The article list removed by normalize_answer.
const std::vector<std::string>& answer_articles();

}  // namespace medvp
