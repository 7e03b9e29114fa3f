#pragma once

#include <string>
#include <vector>

namespace docflow::model {

enum class Speaker { user, assistant };

struct Turn {
  Speaker speaker = Speaker::user;
  std::string text;
};

struct ChatParams {
  double temperature = 0.0;
  int max_tokens = 2048;
};

// One agent's private context for one call. `role` is the agent's role tag
// ("writer", "qa-judge", ...); it selects scripted rules and labels the tap.
struct ChatRequest {
  std::string role;
  std::string role_prompt;
  std::vector<Turn> turns;
  ChatParams params;

  // Throws ValidationError: turns must be non-empty and end with a user turn.
  void validate() const;

  const std::string& last_user_text() const;

  // role_prompt and every turn, newline separated. Used for substring scans.
  std::string flatten() const;
};

inline ChatRequest single_turn(std::string role, std::string role_prompt, std::string user_text) {
  ChatRequest req;
  req.role = std::move(role);
  req.role_prompt = std::move(role_prompt);
  req.turns.push_back({Speaker::user, std::move(user_text)});
  return req;
}

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Must be safe to call concurrently.
  virtual std::string complete(const ChatRequest& request) = 0;
};

}  // namespace docflow::model
