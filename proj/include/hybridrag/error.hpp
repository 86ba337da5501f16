#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hybridrag {

/// Coarse failure classes. The CLI prints the category as the first token of
/// its single-line error message so scripts can branch on it.
enum class ErrorCategory {
  input,             // unreadable or missing file
  format,            // malformed line / record / binary header
  validation,        // well-formed input violating a contract
  missing_artifact,  // a prerequisite output of another command is absent
  mismatch,          // artifacts built from different corpora or configs
  transport,         // HTTP endpoint unreachable or failing
  config,            // bad configuration value
};

inline std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::input: return "input";
    case ErrorCategory::format: return "format";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::missing_artifact: return "missing-artifact";
    case ErrorCategory::mismatch: return "mismatch";
    case ErrorCategory::transport: return "transport";
    case ErrorCategory::config: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace hybridrag
