#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace numem {

/// Bad input or usage: empty corpus, missing numerals, inconsistent options.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed data file. Carries the 1-based line number when known (0 otherwise).
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace numem
