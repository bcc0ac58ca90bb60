#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace contrarank {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input line. line() is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Cross-record consistency failure (duplicate ids, manifest mismatches).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// One or more records violate a type invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

// Caller passed arguments outside an operation's preconditions.
class InputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DegenerateTrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace contrarank
