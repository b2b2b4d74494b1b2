#pragma once

#include <stdexcept>
#include <string>

namespace debtscope {

// Runtime failure: I/O, malformed persisted state, provider outages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied an invalid argument or configuration.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace debtscope
