#include "docflow/model/scripted_backend.hpp"

#include "docflow/common/errors.hpp"
#include "docflow/common/text.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>

namespace docflow::model {

using nlohmann::json;

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules) {
  rules_.reserve(rules.size());
  for (auto& r : rules) {
    CompiledRule c{std::move(r), std::nullopt, false};
    if (c.rule.role.empty()) throw ValidationError("script rule without role");
    if (c.rule.match) {
      try {
        c.pattern.emplace(*c.rule.match, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw ValidationError("invalid script pattern '" + *c.rule.match + "': " + e.what());
      }
    }
    rules_.push_back(std::move(c));
  }
}

std::vector<ScriptRule> ScriptedBackend::parse_jsonl(std::istream& in) {
  std::vector<ScriptRule> rules;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      json j = json::parse(t);
      ScriptRule r;
      r.role = j.at("role").get<std::string>();
      r.reply = j.at("reply").get<std::string>();
      if (j.contains("match") && !j["match"].is_null()) r.match = j["match"].get<std::string>();
      r.repeat = j.value("repeat", false);
      rules.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ValidationError("script line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rules;
}

std::vector<ScriptRule> ScriptedBackend::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open script file " + path.string());
  return parse_jsonl(in);
}

std::string ScriptedBackend::complete(const ChatRequest& request) {
  const std::string& input = request.last_user_text();
  std::lock_guard lock(mu_);
  for (auto& c : rules_) {
    if (c.consumed) continue;
    if (c.rule.role != "*" && c.rule.role != request.role) continue;
    std::smatch m;
    if (c.pattern && !std::regex_search(input, m, *c.pattern)) continue;

    std::vector<std::pair<std::string, std::string>> vars{{"input", input}};
    for (std::size_t g = 1; g < m.size() && g <= 9; ++g) vars.emplace_back(std::to_string(g), m[g].str());
    if (!c.rule.repeat) c.consumed = true;
    return text::render(c.rule.reply, vars);
  }
  throw ScriptExhaustedError("script exhausted for role '" + request.role + "'");
}

std::size_t ScriptedBackend::remaining(const std::string& role) const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (const auto& c : rules_) {
    if (!c.consumed && (c.rule.role == "*" || c.rule.role == role)) ++n;
  }
  return n;
}

}  // namespace docflow::model
