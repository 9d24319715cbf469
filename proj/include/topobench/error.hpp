#pragma once

#include <stdexcept>
#include <string>

namespace topobench {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document. `where` names the offending field or line.
class ParseError : public Error {
 public:
  ParseError(std::string where, const std::string& what)
      : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

class SandboxUnavailable : public Error {
 public:
  using Error::Error;
};

class IncompleteBundle : public Error {
 public:
  IncompleteBundle(std::string missing, const std::string& what)
      : Error(what), missing_(std::move(missing)) {}

  const std::string& missing_file() const noexcept { return missing_; }

 private:
  std::string missing_;
};

}  // namespace topobench
