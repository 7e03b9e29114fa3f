#include "docflow/scenario/fsd.hpp"

#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"
#include "docflow/model/gateway.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <regex>

namespace docflow::scenario {

using nlohmann::json;

namespace {

struct Line {
  std::size_t offset;
  std::string_view text;  // without '\n' and trailing '\r'
};

std::vector<Line> lines_with_offsets(std::string_view s) {
  std::vector<Line> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t nl = s.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? s.size() : nl;
    std::string_view line = s.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back({pos, line});
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

bool is_fence(std::string_view line) {
  std::string_view t = text::trim(line);
  return t.rfind("```", 0) == 0 || t.rfind("~~~", 0) == 0;
}

struct Detected {
  std::string number;
  std::string title;
  int depth = 1;
};

// "1", "1.2", "1.2.3" (components of at most three digits), optional '.' after.
std::size_t numbering_length(std::string_view s, int& components) {
  std::size_t i = 0;
  components = 0;
  while (true) {
    std::size_t digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) && digits < 4) {
      ++i;
      ++digits;
    }
    if (digits == 0 || digits > 3) return 0;
    ++components;
    if (i + 1 < s.size() && s[i] == '.' && std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      ++i;
      continue;
    }
    break;
  }
  if (i < s.size() && s[i] == '.') ++i;
  return i;
}

// Splits a leading "1.2 " numbering off a title.
std::pair<std::string, std::string> split_number(std::string_view title) {
  int comps = 0;
  std::size_t n = numbering_length(title, comps);
  if (n > 0 && n < title.size() && std::isspace(static_cast<unsigned char>(title[n]))) {
    std::string_view rest = text::trim(title.substr(n));
    if (!rest.empty()) {
      std::string number(title.substr(0, n));
      if (!number.empty() && number.back() == '.') number.pop_back();
      return {number, std::string(rest)};
    }
  }
  return {"", std::string(title)};
}

std::optional<Detected> markdown_heading(std::string_view line) {
  std::size_t hashes = 0;
  while (hashes < line.size() && line[hashes] == '#') ++hashes;
  if (hashes == 0 || hashes > 6) return std::nullopt;
  if (hashes < line.size() && line[hashes] != ' ' && line[hashes] != '\t') return std::nullopt;
  std::string_view title = text::trim(line.substr(hashes));
  while (!title.empty() && title.back() == '#') title.remove_suffix(1);
  title = text::trim(title);
  if (title.empty()) return std::nullopt;
  auto [number, rest] = split_number(title);
  return Detected{number, rest, static_cast<int>(hashes)};
}

std::optional<Detected> numbered_heading(std::string_view line) {
  if (line.empty() || std::isspace(static_cast<unsigned char>(line[0]))) return std::nullopt;
  int comps = 0;
  std::size_t n = numbering_length(line, comps);
  if (n == 0 || n >= line.size() || !std::isspace(static_cast<unsigned char>(line[n]))) return std::nullopt;
  std::string_view title = text::trim(line.substr(n));
  if (title.empty() || title.size() > 80) return std::nullopt;
  if (std::islower(static_cast<unsigned char>(title.front()))) return std::nullopt;
  if (std::string_view(".:;,!?").find(title.back()) != std::string_view::npos) return std::nullopt;
  std::string number(line.substr(0, n));
  if (number.back() == '.') number.pop_back();
  return Detected{number, std::string(title), comps};
}

std::optional<Detected> regex_heading(std::string_view line, const std::regex& re) {
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(line.begin(), line.end(), m, re) || m.size() < 3) return std::nullopt;
  std::string marker = text::trim_copy(m[1].str());
  std::string title = text::trim_copy(m[2].str());
  if (title.empty()) return std::nullopt;
  Detected d;
  d.title = title;
  if (!marker.empty() && std::all_of(marker.begin(), marker.end(), [](char c) { return c == '#'; })) {
    d.depth = static_cast<int>(marker.size());
  } else {
    d.number = marker;
    if (!d.number.empty() && d.number.back() == '.') d.number.pop_back();
    d.depth = d.number.empty() ? 1 : static_cast<int>(std::count(d.number.begin(), d.number.end(), '.')) + 1;
  }
  return d;
}

std::vector<ChapterEntry> build_index(std::string_view plaintext, const PreprocessOptions& options) {
  std::vector<Line> lines = lines_with_offsets(plaintext);
  std::vector<std::pair<std::size_t, Detected>> found;

  auto scan = [&](auto&& detect) {
    found.clear();
    bool in_fence = false;
    for (const auto& l : lines) {
      if (is_fence(l.text)) {
        in_fence = !in_fence;
        continue;
      }
      if (in_fence) continue;
      if (auto d = detect(l.text)) found.emplace_back(l.offset, std::move(*d));
    }
  };

  if (options.heading_regex) {
    std::regex re;
    try {
      re = std::regex(*options.heading_regex, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw ValidationError("invalid heading pattern: " + std::string(e.what()));
    }
    scan([&](std::string_view l) { return regex_heading(l, re); });
  } else {
    scan(markdown_heading);
    if (found.empty()) scan(numbered_heading);
  }

  std::vector<ChapterEntry> index;
  for (std::size_t i = 0; i < found.size(); ++i) {
    ChapterEntry c;
    c.heading = found[i].second.title;
    c.number = found[i].second.number;
    c.depth = found[i].second.depth;
    c.span.begin = found[i].first;
    c.span.end = i + 1 < found.size() ? found[i + 1].first : plaintext.size();
    index.push_back(std::move(c));
  }
  return index;
}

std::string single_line(std::string_view s) {
  std::string out;
  for (char c : s) out += (c == '\n' || c == '\r' || c == '\t') ? ' ' : c;
  return text::trim_copy(out);
}

std::string file_name_of(std::string_view ref) {
  std::size_t slash = ref.find_last_of("/\\");
  return std::string(slash == std::string_view::npos ? ref : ref.substr(slash + 1));
}

const std::string* lookup_image(const ImageMap& images, const std::string& ref) {
  if (auto it = images.find(ref); it != images.end()) return &it->second;
  std::string name = file_name_of(ref);
  for (const auto& [key, bytes] : images) {
    if (file_name_of(key) == name) return &bytes;
  }
  return nullptr;
}

const std::regex& image_regex() {
  static const std::regex re(R"(!\[([^\]]*)\]\(\s*<?([^)\s>]+)>?(?:\s+"[^"]*")?\s*\))");
  return re;
}

std::string replace_images(std::string_view source, const ImageMap& images, model::Gateway& gateway) {
  const std::regex& image_re = image_regex();
  std::string out;
  std::map<std::string, std::string> captions;
  auto begin = source.begin();
  std::match_results<std::string_view::const_iterator> m;
  while (std::regex_search(begin, source.end(), m, image_re)) {
    out.append(begin, m[0].first);
    std::string ref = m[2].str();
    auto cached = captions.find(ref);
    if (cached == captions.end()) {
      const std::string* bytes = lookup_image(images, ref);
      if (!bytes) throw ValidationError("image '" + ref + "' is referenced in the FSD but was not provided");
      cached = captions.emplace(ref, single_line(gateway.caption_image(*bytes))).first;
    }
    out += "[IMAGE: " + cached->second + "]";
    begin = m[0].second;
  }
  out.append(begin, source.end());
  return out;
}

json span_json(const Span& s) { return json::array({s.begin, s.end}); }

Span span_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("span must be [begin, end]");
  Span s{j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>()};
  if (s.end < s.begin) throw ValidationError("span end precedes begin");
  return s;
}

json parse_json(std::string_view raw, const char* what) {
  try {
    return json::parse(raw);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

std::vector<std::string> image_references(std::string_view fsd_text) {
  std::vector<std::string> refs;
  auto begin = fsd_text.begin();
  std::match_results<std::string_view::const_iterator> m;
  while (std::regex_search(begin, fsd_text.end(), m, image_regex())) {
    std::string ref = m[2].str();
    if (std::find(refs.begin(), refs.end(), ref) == refs.end()) refs.push_back(ref);
    begin = m[0].second;
  }
  return refs;
}

std::string PreprocessedFSD::to_json() const {
  json chapters = json::array();
  for (const auto& c : chapter_index) {
    chapters.push_back({{"heading", c.heading}, {"number", c.number}, {"depth", c.depth}, {"span", span_json(c.span)}});
  }
  return json{{"source_name", source_name}, {"plaintext", plaintext}, {"chapters", chapters}, {"warnings", warnings}}
      .dump();
}

PreprocessedFSD PreprocessedFSD::from_json(std::string_view json_text) {
  json j = parse_json(json_text, "preprocessed FSD");
  try {
    PreprocessedFSD f;
    f.source_name = j.value("source_name", "");
    f.plaintext = j.at("plaintext").get<std::string>();
    for (const auto& c : j.at("chapters")) {
      ChapterEntry e;
      e.heading = c.at("heading").get<std::string>();
      e.number = c.value("number", "");
      e.depth = c.value("depth", 1);
      e.span = span_from(c.at("span"));
      if (e.span.end > f.plaintext.size()) throw ValidationError("chapter span exceeds the plaintext");
      f.chapter_index.push_back(std::move(e));
    }
    f.warnings = j.value("warnings", std::vector<std::string>{});
    return f;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed preprocessed FSD: ") + e.what());
  }
}

std::string ChapterExtract::to_json() const {
  return json{{"heading", heading}, {"span", span_json(span)}, {"body", body}}.dump();
}

ChapterExtract ChapterExtract::from_json(std::string_view json_text) {
  json j = parse_json(json_text, "chapter extract");
  try {
    ChapterExtract c;
    c.heading = j.at("heading").get<std::string>();
    c.span = span_from(j.at("span"));
    c.body = j.at("body").get<std::string>();
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed chapter extract: ") + e.what());
  }
}

PreprocessedFSD preprocess_fsd(std::string_view fsd_text, const ImageMap& images, model::Gateway& gateway,
                               std::string source_name, const PreprocessOptions& options) {
  if (text::trim(fsd_text).empty()) throw ValidationError("FSD text is empty");
  PreprocessedFSD out;
  out.source_name = std::move(source_name);
  out.plaintext = replace_images(fsd_text, images, gateway);
  out.chapter_index = build_index(out.plaintext, options);
  if (out.chapter_index.empty()) {
    ChapterEntry whole;
    whole.heading = out.source_name.empty() ? "Document" : out.source_name;
    whole.span = {0, out.plaintext.size()};
    out.chapter_index.push_back(whole);
    out.warnings.push_back("no headings found; the whole document is treated as one chapter");
  }
  return out;
}

ChapterExtract retrieve_chapter(const PreprocessedFSD& fsd, std::string_view requested) {
  std::string_view want = text::trim(requested);
  if (want.empty()) throw ValidationError("no chapter requested");
  const auto& index = fsd.chapter_index;

  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto& c = index[i];
    if (text::iequals(c.heading, want) || (!c.number.empty() && c.number == want) ||
        (!c.number.empty() && text::iequals(c.number + " " + c.heading, want))) {
      hits.push_back(i);
    }
  }
  if (hits.empty()) {
    for (std::size_t i = 0; i < index.size(); ++i) {
      if (text::icontains(index[i].heading, want)) hits.push_back(i);
    }
  }

  auto label = [&](std::size_t i) {
    const auto& c = index[i];
    return c.number.empty() ? c.heading : c.number + " " + c.heading;
  };
  if (hits.empty()) {
    std::vector<std::string> all;
    for (std::size_t i = 0; i < index.size(); ++i) all.push_back(label(i));
    throw NotFoundError("chapter not found: '" + std::string(want) + "'", std::move(all));
  }
  if (hits.size() > 1) {
    std::vector<std::string> cands;
    for (std::size_t i : hits) cands.push_back(label(i));
    throw AmbiguityError("chapter '" + std::string(want) + "' is ambiguous", std::move(cands));
  }

  std::size_t i = hits.front();
  const auto& c = index[i];
  Span span{c.span.begin, fsd.plaintext.size()};
  for (std::size_t j = i + 1; j < index.size(); ++j) {
    if (index[j].depth <= c.depth) {
      span.end = index[j].span.begin;
      break;
    }
  }
  ChapterExtract out;
  out.heading = c.heading;
  out.span = span;
  out.body = fsd.plaintext.substr(span.begin, span.size());
  return out;
}

}  // namespace docflow::scenario
