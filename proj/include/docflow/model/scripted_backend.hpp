#pragma once

#include "docflow/model/chat.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace docflow::model {

// One line of a script file:
//   {"role": "writer", "match": "Password", "reply": "...", "repeat": false}
// `role` "*" matches every role. `match` is an ECMAScript regex searched in the
// last user turn. In `reply`, "{{input}}" expands to the last user turn and
// "{{1}}".."{{9}}" to capture groups of `match`.
struct ScriptRule {
  std::string role;
  std::optional<std::string> match;
  std::string reply;
  bool repeat = false;
};

// Deterministic stand-in for a model. For a request with role R the backend
// takes the first rule, in file order, that (a) targets R or "*", (b) has not
// been consumed, and (c) whose pattern matches. Non-repeating rules are
// consumed on use, so each role effectively has its own cursor.
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptRule> rules);

  static std::vector<ScriptRule> parse_jsonl(std::istream& in);
  static std::vector<ScriptRule> load_file(const std::filesystem::path& path);

  std::string complete(const ChatRequest& request) override;

  // Unconsumed rules applicable to `role` (repeating rules included).
  std::size_t remaining(const std::string& role) const;

 private:
  struct CompiledRule {
    ScriptRule rule;
    std::optional<std::regex> pattern;
    bool consumed = false;
  };

  mutable std::mutex mu_;
  std::vector<CompiledRule> rules_;
};

}  // namespace docflow::model
