#include "topobench/cwe.hpp"

#include <charconv>
#include <regex>

#include "topobench/error.hpp"

namespace topobench {

std::optional<std::string> try_normalize_cwe(std::string_view text) {
  static const std::regex pattern(R"(cwe[\s_-]*([0-9]+))", std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(text.begin(), text.end(), m, pattern)) return std::nullopt;
  std::string digits = m[1].str();
  const auto first = digits.find_first_not_of('0');
  digits = first == std::string::npos ? "0" : digits.substr(first);
  return "CWE-" + digits;
}

std::string normalize_cwe(std::string_view text) {
  if (text.empty()) throw ParseError("cwe", "empty text");
  if (auto id = try_normalize_cwe(text)) return *id;
  throw ParseError("cwe", "no CWE identifier in '" + std::string(text) + "'");
}

unsigned long cwe_number(std::string_view canonical) {
  const auto dash = canonical.find('-');
  if (dash == std::string_view::npos) return 0;
  unsigned long n = 0;
  std::from_chars(canonical.data() + dash + 1, canonical.data() + canonical.size(), n);
  return n;
}

bool cwe_less(std::string_view a, std::string_view b) {
  const auto na = cwe_number(a);
  const auto nb = cwe_number(b);
  if (na != nb) return na < nb;
  return a < b;
}

}  // namespace topobench
