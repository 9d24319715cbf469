#include "topobench/endpoint.hpp"

#include <charconv>

namespace topobench {

std::string Endpoint::origin() const {
  return scheme + "://" + host + ":" + std::to_string(port);
}

std::optional<Endpoint> parse_endpoint(std::string_view uri) {
  const auto sep = uri.find("://");
  if (sep == std::string_view::npos || sep == 0) return std::nullopt;
  Endpoint ep;
  ep.scheme = std::string(uri.substr(0, sep));
  if (ep.scheme != "http" && ep.scheme != "https" && ep.scheme != "tcp") return std::nullopt;

  std::string_view rest = uri.substr(sep + 3);
  const auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  if (slash != std::string_view::npos) ep.path = std::string(rest.substr(slash));
  if (ep.scheme != "tcp" && ep.path.empty()) ep.path = "/";
  if (ep.scheme == "tcp" && !ep.path.empty() && ep.path != "/") return std::nullopt;
  if (ep.scheme == "tcp") ep.path.clear();

  const auto colon = authority.rfind(':');
  if (colon == std::string_view::npos) {
    if (ep.scheme == "tcp") return std::nullopt;
    ep.host = std::string(authority);
    ep.port = ep.scheme == "https" ? 443 : 80;
  } else {
    ep.host = std::string(authority.substr(0, colon));
    const auto port_text = authority.substr(colon + 1);
    unsigned port = 0;
    const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port == 0 || port > 65535) {
      return std::nullopt;
    }
    ep.port = static_cast<std::uint16_t>(port);
  }
  if (ep.host.empty()) return std::nullopt;
  return ep;
}

}  // namespace topobench
