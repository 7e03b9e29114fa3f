#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace docflow::scenario {

// "de" -> "German"; unknown tags are returned unchanged.
std::string language_name(std::string_view tag);

// "German", "de", "DE-de" -> "de"; unknown names are lowercased and trimmed.
std::string normalize_language(std::string_view name_or_tag);

// Finds "into <Language>" / "in <Language>" / "to <Language>" for a known
// language name in a free-text request.
std::optional<std::string> language_from_prompt(std::string_view prompt);

// Finds "section <name>" / "chapter <name>" in a free-text request.
std::optional<std::string> section_from_prompt(std::string_view prompt);

}  // namespace docflow::scenario
