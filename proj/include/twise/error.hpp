#pragma once

#include <stdexcept>
#include <string>

namespace twise {

/// Base error for everything the library can reject at runtime.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Error with a source position, thrown by the text parsers.
class ParseError : public Error {
public:
  ParseError(const std::string& msg, int line, int column = 0)
      : Error("line " + std::to_string(line) +
              (column > 0 ? ":" + std::to_string(column) : std::string()) +
              ": " + msg),
        line(line),
        column(column) {}

  int line;
  int column;
};

} // namespace twise
