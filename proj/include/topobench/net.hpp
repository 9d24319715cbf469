#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace topobench::net {

/// Connects, sends `line` + '\n', returns the first response line (without newline).
/// nullopt on connect failure or timeout.
std::optional<std::string> tcp_exchange_line(const std::string& host, std::uint16_t port, std::string_view line,
                                             std::chrono::milliseconds timeout);

bool tcp_can_connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);

}  // namespace topobench::net
