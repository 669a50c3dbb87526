#pragma once

#include <stdexcept>
#include <string>

namespace fpp {

/// Raised when arguments violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by queries that need at least one point.
class NoPoints : public std::runtime_error {
 public:
  NoPoints() : std::runtime_error("sample contains no points") {}
};

/// An operation refused to run (e.g. the brute-force oracle above its size bound).
class Refused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter gate required by a bench assertion does not hold.
class GateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace fpp
