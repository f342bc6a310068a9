#include "ah/errors.hpp"

namespace ah {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse: return "parse";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::domain: return "domain";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::io: return "io";
    case ErrorCode::format: return "format";
    case ErrorCode::tool: return "tool";
    case ErrorCode::modality_missing: return "modality-missing";
    case ErrorCode::inconsistent_annotation: return "inconsistent-annotation";
    case ErrorCode::transport: return "transport";
    case ErrorCode::endpoint: return "endpoint";
    case ErrorCode::tie: return "tie";
    case ErrorCode::coverage: return "coverage";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace ah
