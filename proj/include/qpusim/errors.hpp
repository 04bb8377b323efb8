#pragma once

#include <stdexcept>
#include <string>

namespace qpusim {

// Bad configuration input (file missing, malformed JSON, unknown key).
// The CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated operation precondition or domain invariant. Exit code 2.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Script syntax error with source position. Exit code 2.
struct ParseError : ValidationError {
  int line;
  int column;
  ParseError(int line_, int column_, const std::string& what_)
      : ValidationError("line " + std::to_string(line_) + ", column " +
                        std::to_string(column_) + ": " + what_),
        line(line_),
        column(column_) {}
};

}  // namespace qpusim
