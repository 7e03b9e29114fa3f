#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace docflow::model {
class Gateway;
}

namespace docflow::scenario {

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const Span&) const = default;
};

struct ChapterEntry {
  std::string heading;  // title without numbering, e.g. "Password"
  std::string number;   // "1.1" when the heading was numbered, else empty
  int depth = 1;
  Span span;            // heading line up to the next heading of any depth

  bool operator==(const ChapterEntry&) const = default;
};

struct PreprocessedFSD {
  std::string source_name;
  std::string plaintext;  // images replaced by "[IMAGE: caption]"
  std::vector<ChapterEntry> chapter_index;
  std::vector<std::string> warnings;

  std::string to_json() const;
  static PreprocessedFSD from_json(std::string_view json_text);
};

struct ChapterExtract {
  std::string heading;
  std::string body;  // plaintext slice of span, subsections included
  Span span;

  std::string to_json() const;
  static ChapterExtract from_json(std::string_view json_text);
};

// Image references in document order, without duplicates.
std::vector<std::string> image_references(std::string_view fsd_text);

// Image sidecar: reference as written in the text (or its file name) -> bytes.
using ImageMap = std::map<std::string, std::string>;

struct PreprocessOptions {
  // Replaces the built-in heading grammar. Group 1 is the level marker
  // ("##" or "1.2"), group 2 the title.
  std::optional<std::string> heading_regex;
};

// Turns pre-extracted FSD text into plaintext plus a chapter index.
// Markdown images "![alt](ref)" are captioned through the gateway and replaced
// by "[IMAGE: caption]". Headings are markdown hash lines; when a document has
// none, numbered lines such as "1 Login" or "1.2. Password" are used instead.
// Without any heading the whole text becomes one implicit chapter (warning).
PreprocessedFSD preprocess_fsd(std::string_view fsd_text, const ImageMap& images, model::Gateway& gateway,
                               std::string source_name = "fsd", const PreprocessOptions& options = {});

// Case-insensitive exact heading (or number) match first, then a unique
// case-insensitive substring match. Throws NotFoundError listing all headings,
// or AmbiguityError listing the candidates.
ChapterExtract retrieve_chapter(const PreprocessedFSD& fsd, std::string_view requested);

}  // namespace docflow::scenario
