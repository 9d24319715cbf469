#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace topobench {

/// Parsed http(s):// or tcp:// endpoint.
struct Endpoint {
  std::string scheme;
  std::string host;
  std::uint16_t port = 0;
  std::string path;  // always begins with '/' for http(s); empty for tcp

  /// "scheme://host:port" without the path.
  std::string origin() const;
};

/// Returns nullopt for anything that is not a syntactically usable endpoint.
std::optional<Endpoint> parse_endpoint(std::string_view uri);

}  // namespace topobench
