#include "docflow/app/error_mapping.hpp"

#include "docflow/common/errors.hpp"

#include <json.hpp>

namespace docflow::app {

std::string ErrorInfo::to_json() const {
  nlohmann::json j = {{"code", code}, {"message", message}};
  if (!candidates.empty()) j["candidates"] = candidates;
  return j.dump();
}

ErrorInfo classify(const std::exception& e) {
  ErrorInfo info;
  info.message = e.what();
  if (const auto* nf = dynamic_cast<const NotFoundError*>(&e)) {
    info.http_status = 404;
    info.code = "not_found";
    info.candidates = nf->candidates();
  } else if (const auto* amb = dynamic_cast<const AmbiguityError*>(&e)) {
    info.http_status = 409;
    info.code = "ambiguous";
    info.candidates = amb->candidates();
  } else if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const nlohmann::json::exception*>(&e)) {
    info.http_status = 400;
    info.code = "validation_error";
  } else if (dynamic_cast<const ModelError*>(&e)) {
    info.http_status = 502;
    info.code = "backend_error";
  } else if (dynamic_cast<const Error*>(&e)) {
    info.http_status = 400;
    info.code = "validation_error";
  } else {
    info.http_status = 500;
    info.code = "internal_error";
  }
  return info;
}

}  // namespace docflow::app
