#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace declension {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed CoNLL-U input. Carries the 1-based line number and the raw line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string content, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what + ": '" + content + "'"),
        line_(line),
        content_(std::move(content)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& content() const noexcept { return content_; }

 private:
  std::size_t line_;
  std::string content_;
};

/// Unreadable or inconsistent model file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace declension
