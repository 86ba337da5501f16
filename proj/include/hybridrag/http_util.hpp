#pragma once

#include <string>
#include <utility>

#include "hybridrag/error.hpp"

namespace hybridrag {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always starts with '/'
};

/// Splits "http://host:port/some/path" into origin and path. A URL without a
/// path gets `default_path`.
inline UrlParts split_url(const std::string& url, const std::string& default_path = "/") {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCategory::config, "endpoint URL needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, default_path};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace hybridrag
