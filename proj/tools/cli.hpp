#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace msg::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Runs `msgtool` with `args` (excluding the program name). Returns the
/// process exit code: 0 success, 2 input/validation error, 3 I/O error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace msg::cli
