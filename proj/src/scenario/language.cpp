#include "docflow/scenario/language.hpp"

#include "docflow/common/text.hpp"

#include <algorithm>
#include <array>
#include <regex>
#include <utility>

namespace docflow::scenario {

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 20> kLanguages{{
    {"en", "English"},   {"de", "German"},    {"sk", "Slovak"},     {"cs", "Czech"},    {"fr", "French"},
    {"es", "Spanish"},   {"it", "Italian"},   {"pl", "Polish"},     {"hu", "Hungarian"}, {"nl", "Dutch"},
    {"pt", "Portuguese"}, {"sv", "Swedish"},  {"da", "Danish"},     {"fi", "Finnish"},  {"no", "Norwegian"},
    {"ro", "Romanian"},  {"uk", "Ukrainian"}, {"ru", "Russian"},    {"ja", "Japanese"}, {"zh", "Chinese"},
}};

}  // namespace

std::string language_name(std::string_view tag) {
  std::string norm = normalize_language(tag);
  for (const auto& [code, name] : kLanguages) {
    if (norm == code) return std::string(name);
  }
  return std::string(text::trim(tag));
}

std::string normalize_language(std::string_view name_or_tag) {
  std::string s = text::to_lower(text::trim(name_or_tag));
  for (const auto& [code, name] : kLanguages) {
    if (s == code || s == text::to_lower(name)) return std::string(code);
  }
  std::size_t sep = s.find_first_of("-_");
  if (sep == 2) {
    std::string primary = s.substr(0, 2);
    for (const auto& [code, name] : kLanguages) {
      if (primary == code) return std::string(code);
    }
  }
  return s;
}

std::optional<std::string> language_from_prompt(std::string_view prompt) {
  static const std::regex re(R"(\b(?:into|in|to)\s+([A-Za-z]+)\b)", std::regex::icase);
  std::string p(prompt);
  for (auto it = std::sregex_iterator(p.begin(), p.end(), re); it != std::sregex_iterator(); ++it) {
    std::string word = text::to_lower((*it)[1].str());
    for (const auto& [code, name] : kLanguages) {
      if (word == text::to_lower(name)) return std::string(code);
    }
  }
  return std::nullopt;
}

std::optional<std::string> section_from_prompt(std::string_view prompt) {
  static const std::regex re(R"(\b(?:section|chapter)\s+(.+))", std::regex::icase);
  std::string p(prompt);
  std::smatch m;
  if (!std::regex_search(p, m, re)) return std::nullopt;
  std::string rest = text::trim_copy(m[1].str());
  if (rest.empty()) return std::nullopt;

  if (rest.front() == '"' || rest.front() == '\'') {
    std::size_t close = rest.find(rest.front(), 1);
    if (close != std::string::npos) return text::trim_copy(std::string_view(rest).substr(1, close - 1));
  }

  std::size_t cut = rest.size();
  for (std::string_view stop : {". ", "? ", "! ", ", ", "; ", " and ", " then ", " into ", "\n"}) {
    std::size_t pos = text::to_lower(rest).find(stop);
    if (pos != std::string::npos) cut = std::min(cut, pos);
  }
  std::string name = text::trim_copy(std::string_view(rest).substr(0, cut));
  while (!name.empty() && std::string_view(".!?,;:").find(name.back()) != std::string_view::npos) name.pop_back();
  name = text::trim_copy(name);
  if (name.empty()) return std::nullopt;
  return name;
}

}  // namespace docflow::scenario
