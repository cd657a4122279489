#include "medvp/entities.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "medvp/builtin_data.hpp"
#include "medvp/text.hpp"

namespace medvp {

namespace {

using Json = nlohmann::ordered_json;

std::string surface_key(std::string_view surface) {
  std::vector<std::string> tokens = alnum_tokens(surface);
  for (auto& t : tokens) t = singularize(t);
  return join(tokens, " ");
}

std::size_t token_count(const std::string& key) {
  return key.empty() ? 0 : static_cast<std::size_t>(std::count(key.begin(), key.end(), ' ')) + 1;
}

std::optional<std::vector<std::string>> string_array(const Json& j) {
  if (!j.is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) return std::nullopt;
    out.push_back(v.get<std::string>());
  }
  return out;
}

// First bracketed JSON array of strings embedded in free text.
std::optional<std::vector<std::string>> array_in_text(const std::string& text) {
  for (std::size_t open = text.find('['); open != std::string::npos; open = text.find('[', open + 1)) {
    for (std::size_t close = text.rfind(']'); close != std::string::npos && close > open;
         close = close == 0 ? std::string::npos : text.rfind(']', close - 1)) {
      auto parsed = Json::parse(text.substr(open, close - open + 1), nullptr, false);
      if (!parsed.is_discarded()) {
        if (auto arr = string_array(parsed)) return arr;
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view builtin_gazetteer_text() { return builtin::gazetteer(); }

Gazetteer Gazetteer::builtin() { return parse(builtin_gazetteer_text()); }

Gazetteer Gazetteer::parse(std::string_view text) {
  Gazetteer g;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto bar = t.find('|');
    if (bar == std::string::npos) {
      g.add(t, t);
    } else {
      g.add(trim(t.substr(0, bar)), trim(t.substr(bar + 1)));
    }
  }
  return g;
}

Gazetteer Gazetteer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open gazetteer " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Gazetteer::add(std::string_view surface, std::string_view canonical) {
  std::string key = surface_key(surface);
  if (key.empty()) return;
  std::string value = canonical_entity(canonical);
  if (value.empty()) value = key;
  max_tokens_ = std::max(max_tokens_, token_count(key));
  entries_[std::move(key)] = std::move(value);
}

void Gazetteer::extend(const Gazetteer& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
  max_tokens_ = std::max(max_tokens_, other.max_tokens_);
}

std::optional<std::string> Gazetteer::lookup(std::string_view surface) const {
  if (auto it = entries_.find(surface_key(surface)); it != entries_.end()) return it->second;
  return std::nullopt;
}

std::vector<std::string> Gazetteer::extract(std::string_view question) const {
  std::vector<std::string> tokens = alnum_tokens(question);
  for (auto& t : tokens) t = singularize(t);
  std::vector<std::string> found;
  std::set<std::string> seen;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t matched = 0;
    for (std::size_t len = std::min(max_tokens_, tokens.size() - i); len > 0; --len) {
      std::vector<std::string> span(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                    tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
      if (auto it = entries_.find(join(span, " ")); it != entries_.end()) {
        if (seen.insert(it->second).second) found.push_back(it->second);
        matched = len;
        break;
      }
    }
    i += matched ? matched : 1;
  }
  return found;
}

std::vector<std::string> extract_gazetteer(std::string_view question, const Gazetteer& gazetteer) {
  return gazetteer.extract(question);
}

std::vector<std::string> clean_entities(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : raw) {
    std::string c = canonical_entity(r);
    if (c.empty()) continue;
    if (seen.insert(c).second) out.push_back(std::move(c));
  }
  return out;
}

std::string_view default_entity_prompt() {
  return "You extract region-level medical entities from questions about medical images.\n"
         "List the organs, anatomical structures, lesions or diseases that the question refers to. "
         "If it names none directly, list the more general organs or diseases that are likely relevant "
         "to answering it.\n"
         "Reply with a JSON array of short lowercase strings and nothing else.\n"
         "Question: {question}";
}

std::optional<LlmEndpoint> LlmEndpoint::from_env() {
  const char* url = std::getenv("MEDVP_LLM_URL");
  if (!url || !*url) return std::nullopt;
  LlmEndpoint e;
  e.url = url;
  if (const char* key = std::getenv("MEDVP_LLM_API_KEY")) e.api_key = key;
  if (const char* model = std::getenv("MEDVP_LLM_MODEL"); model && *model) e.model = model;
  return e;
}

LlmEntityClient::LlmEntityClient(LlmEndpoint endpoint, std::shared_ptr<HttpTransport> transport,
                                 std::string prompt_template)
    : endpoint_(std::move(endpoint)), transport_(std::move(transport)), template_(std::move(prompt_template)) {
  if (template_.find("{question}") == std::string::npos) {
    throw Error("entity prompt template has no {question} slot");
  }
}

std::string LlmEntityClient::render_prompt(std::string_view question) const {
  std::string out = template_;
  const std::string slot = "{question}";
  for (auto pos = out.find(slot); pos != std::string::npos; pos = out.find(slot, pos + question.size())) {
    out.replace(pos, slot.size(), question);
  }
  return out;
}

std::string LlmEntityClient::build_request(std::string_view question) const {
  Json j;
  j["model"] = endpoint_.model;
  j["messages"] = Json::array({Json{{"role", "user"}, {"content", render_prompt(question)}}});
  j["temperature"] = 0;
  return j.dump();
}

std::vector<std::string> LlmEntityClient::parse_reply(const std::string& body) {
  auto parsed = Json::parse(body, nullptr, false);
  std::optional<std::vector<std::string>> entities;
  if (!parsed.is_discarded()) {
    if (parsed.is_object() && parsed.contains("choices")) {
      const Json* content = nullptr;
      try {
        content = &parsed.at("choices").at(0).at("message").at("content");
      } catch (const Json::exception&) {
        content = nullptr;
      }
      if (content && content->is_string()) entities = array_in_text(content->get<std::string>());
    } else if (parsed.is_object() && parsed.contains("entities")) {
      entities = string_array(parsed.at("entities"));
    } else {
      entities = string_array(parsed);
    }
  } else {
    entities = array_in_text(body);
  }
  if (!entities) throw LlmReplyError("unparseable entity reply", body);
  return clean_entities(*entities);
}

std::vector<std::string> LlmEntityClient::extract(std::string_view question) const {
  HttpHeaders headers;
  if (!endpoint_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + endpoint_.api_key);
  const std::string reply =
      post_json_with_retry(*transport_, endpoint_.url, build_request(question), headers, endpoint_.retry);
  return parse_reply(reply);
}

std::vector<std::string> extract_llm(std::string_view question, const LlmEntityClient& client,
                                     const Gazetteer* fallback) {
  try {
    return client.extract(question);
  } catch (const LlmReplyError&) {
    if (!fallback) throw;
    return fallback->extract(question);
  }
}

}  // namespace medvp
