#include "medvp/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace medvp {

namespace {

bool is_alnum(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 128 && std::isalnum(u);
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Words the suffix rules would mangle.
constexpr std::array<std::string_view, 14> kInvariantWords = {
    "pancreas", "series", "species", "diabetes", "lens",  "pelvis",   "thorax",
    "uterus",   "corpus", "news",    "gas",      "bias",  "sinus",    "vas",
};

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  return to_lower(s.substr(0, prefix.size())) == to_lower(prefix);
}

std::vector<std::string> alnum_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (is_alnum(c)) {
      cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string singularize(std::string_view w) {
  std::string word(w);
  if (word.size() <= 3) return word;
  if (std::find(kInvariantWords.begin(), kInvariantWords.end(), word) != kInvariantWords.end()) {
    return word;
  }
  if (ends_with(word, "ies")) return word.substr(0, word.size() - 3) + "y";
  if (ends_with(word, "sses") || ends_with(word, "xes") || ends_with(word, "ches") ||
      ends_with(word, "shes")) {
    return word.substr(0, word.size() - 2);
  }
  if (ends_with(word, "ss") || ends_with(word, "us") || ends_with(word, "is") ||
      ends_with(word, "as") || ends_with(word, "os")) {
    return word;
  }
  if (ends_with(word, "s")) return word.substr(0, word.size() - 1);
  return word;
}

std::string canonical_entity(std::string_view s) {
  std::string lowered = to_lower(trim(s));
  std::vector<std::string> words;
  std::string cur;
  for (char c : lowered) {
    if (is_space(c)) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  if (words.empty()) return {};
  words.back() = singularize(words.back());
  return join(words, " ");
}

const std::vector<std::string>& answer_articles() {
  static const std::vector<std::string> articles = {"a", "an", "the"};
  return articles;
}

std::string normalize_answer(std::string_view s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (u >= 128 || is_alnum(c)) {
      cleaned += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    } else {
      cleaned += ' ';
    }
  }
  std::vector<std::string> words;
  std::string cur;
  const auto& articles = answer_articles();
  auto flush = [&] {
    if (!cur.empty() && std::find(articles.begin(), articles.end(), cur) == articles.end()) {
      words.push_back(cur);
    }
    cur.clear();
  };
  for (char c : cleaned) {
    if (c == ' ') {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  return join(words, " ");
}

}  // namespace medvp
