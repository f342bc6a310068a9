#pragma once

#include <stdexcept>
#include <string>

namespace ah {

enum class ErrorCode {
  parse,
  conflict,
  domain,
  precondition,
  io,
  format,
  tool,
  modality_missing,
  inconsistent_annotation,
  transport,
  endpoint,
  tie,
  coverage,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ah
