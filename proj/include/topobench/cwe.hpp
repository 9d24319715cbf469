#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace topobench {

/// Extracts the first CWE identifier from free text and returns it as "CWE-<n>".
/// Accepts "CWE-89", "cwe 89", "cwe89", "CWE-089". Throws ParseError when none is found.
std::string normalize_cwe(std::string_view text);

std::optional<std::string> try_normalize_cwe(std::string_view text);

/// Numeric part of a canonical id; used for ordering.
unsigned long cwe_number(std::string_view canonical);

/// Orders canonical ids numerically, falling back to lexical order.
bool cwe_less(std::string_view a, std::string_view b);

}  // namespace topobench
