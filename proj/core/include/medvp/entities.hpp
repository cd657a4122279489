#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medvp/http_client.hpp"
#include "medvp/types.hpp"

namespace medvp {

/// Dictionary of entity surface forms.
///
/// File format: one entry per line, `surface` or `surface|canonical`;
/// blank lines and lines starting with '#' are ignored. Surfaces are
/// tokenized into lowercase alphanumeric runs with each word singularized,
/// so "Kidneys", "kidney" and "KIDNEY" all match the same entry.
class Gazetteer {
 public:
  Gazetteer() = default;

  /// The vocabulary shipped with the tool (organs, findings, modalities).
  static Gazetteer builtin();
  static Gazetteer parse(std::string_view text);
  static Gazetteer load(const std::filesystem::path& path);

  /// Adds or replaces an entry. Empty surfaces are ignored.
  void add(std::string_view surface, std::string_view canonical);
  /// Merges `other` into this gazetteer; entries in `other` win.
  void extend(const Gazetteer& other);

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] std::optional<std::string> lookup(std::string_view surface) const;

  /// Entities in document order, longest match first at each position,
  /// without duplicates.
  [[nodiscard]] std::vector<std::string> extract(std::string_view question) const;

 private:
  // Key: space-joined singularized tokens of the surface form.
  std::map<std::string, std::string> entries_;
  std::size_t max_tokens_ = 0;
};

/// Raw text of the built-in vocabulary file.
std::string_view builtin_gazetteer_text();

/// Gazetteer-based extraction.
std::vector<std::string> extract_gazetteer(std::string_view question, const Gazetteer& gazetteer);

/// Canonicalizes, drops empty strings and duplicates, keeps first-seen order.
std::vector<std::string> clean_entities(const std::vector<std::string>& raw);

/// Default instruction for the entity-recognition request. Must contain
/// the `{question}` slot.
std::string_view default_entity_prompt();

/// Raised when the model's reply cannot be parsed; carries the raw reply.
class LlmReplyError : public Error {
 public:
  LlmReplyError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
  [[nodiscard]] const std::string& raw_reply() const { return raw_; }

 private:
  std::string raw_;
};

struct LlmEndpoint {
  std::string url;
  std::string api_key;
  std::string model = "default";
  RetryPolicy retry;

  /// Reads MEDVP_LLM_URL, MEDVP_LLM_API_KEY and MEDVP_LLM_MODEL; returns nullopt
  /// when no URL is set.
  static std::optional<LlmEndpoint> from_env();
};

/// Chat-completion client: sends
///   {"model": ..., "messages": [{"role": "user", "content": <prompt>}], "temperature": 0}
/// and reads the entity list as a JSON array of strings from
/// choices[0].message.content (a bare array or {"entities": [...]} body is
/// also accepted).
class LlmEntityClient {
 public:
  LlmEntityClient(LlmEndpoint endpoint, std::shared_ptr<HttpTransport> transport,
                  std::string prompt_template = std::string(default_entity_prompt()));

  /// Fills `{question}` in the template. Throws Error if the slot is absent.
  [[nodiscard]] std::string render_prompt(std::string_view question) const;
  [[nodiscard]] std::string build_request(std::string_view question) const;

  /// Parses a reply body into cleaned entities; throws LlmReplyError.
  static std::vector<std::string> parse_reply(const std::string& body);

  /// Throws HttpError when the endpoint keeps failing and LlmReplyError on
  /// an unparseable reply.
  std::vector<std::string> extract(std::string_view question) const;

 private:
  LlmEndpoint endpoint_;
  std::shared_ptr<HttpTransport> transport_;
  std::string template_;
};

/// LLM extraction that falls back to `fallback` when the reply cannot be
/// parsed. Transport failures are never masked.
std::vector<std::string> extract_llm(std::string_view question, const LlmEntityClient& client,
                                     const Gazetteer* fallback);

}  // namespace medvp
