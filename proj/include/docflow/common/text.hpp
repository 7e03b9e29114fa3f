#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace docflow::text {

// ASCII-only case folding; bytes >= 0x80 pass through untouched so UTF-8
// sequences survive.
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);

std::string_view trim(std::string_view s);
std::string trim_copy(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix);

// Splits on '\n'; a trailing '\r' is stripped from every line.
std::vector<std::string_view> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Largest position <= pos that does not fall inside a UTF-8 multi-byte sequence.
std::size_t utf8_floor(std::string_view s, std::size_t pos);

// Cuts s to at most max_bytes on a UTF-8 boundary.
std::string truncate_utf8(std::string_view s, std::size_t max_bytes);

// Replaces every "{{key}}" with vars[key]; unknown keys are left intact.
std::string render(std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& vars);

std::string sha256_hex(std::string_view bytes);

using Timestamp = std::chrono::sys_seconds;

// "YYYY-MM-DDTHH:MM:SSZ" (fractional seconds and "+00:00" accepted on parse).
std::string format_utc(Timestamp t);
Timestamp parse_utc(std::string_view s);
Timestamp now_utc();

}  // namespace docflow::text
