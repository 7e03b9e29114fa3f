#pragma once

#include <exception>
#include <string>
#include <vector>

namespace docflow::app {

// How a failure is reported to HTTP clients and CLI users.
struct ErrorInfo {
  int http_status = 500;
  std::string code;  // validation_error | not_found | ambiguous | backend_error | internal_error
  std::string message;
  std::vector<std::string> candidates;

  std::string to_json() const;
};

ErrorInfo classify(const std::exception& e);

}  // namespace docflow::app
