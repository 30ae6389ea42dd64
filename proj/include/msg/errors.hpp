#pragma once

#include <stdexcept>
#include <string>

namespace msg {

/// Malformed or inconsistent input (bad file contents, violated invariants,
/// mismatched shapes). The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failures. The CLI maps this to exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace msg
