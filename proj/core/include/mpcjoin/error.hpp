#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mpcjoin {

// Base for every error the library reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed query text; position is a byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Structurally invalid query (self-join, unknown variable, ...).
class QueryError : public Error {
 public:
  using Error::Error;
};

// A documented precondition does not hold for the given arguments.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// An exponential enumeration or evaluation exceeded its configured limit.
class GuardError : public Error {
 public:
  using Error::Error;
};

}  // namespace mpcjoin
