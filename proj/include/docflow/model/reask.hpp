#pragma once

#include "docflow/common/errors.hpp"
#include "docflow/model/gateway.hpp"

#include <string>
#include <string_view>

namespace docflow::model {

// Sends request and hands the reply to parse. A ValidationError from parse
// appends the reply and a correction turn and asks again, up to `reasks`
// times; then OutputFormatError("<what> after N attempts: <last error>").
template <typename Parse>
auto ask_with_reasks(Gateway& gateway, ChatRequest request, int reasks, const std::string& what, Parse&& parse)
    -> decltype(parse(std::string_view{})) {
  std::string last_error;
  for (int attempt = 0; attempt <= reasks; ++attempt) {
    std::string reply = gateway.complete(request);
    try {
      return parse(reply);
    } catch (const ValidationError& e) {
      last_error = e.what();
      request.turns.push_back({Speaker::assistant, reply});
      request.turns.push_back(
          {Speaker::user, "Your reply could not be used (" + last_error + "). Reply again, strictly in the required format."});
    }
  }
  throw OutputFormatError(what + " after " + std::to_string(reasks + 1) + " attempts: " + last_error);
}

}  // namespace docflow::model
