#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace polyleon::cli {

enum Exit : int { kOk = 0, kFailed = 1, kUsage = 2, kInconclusive = 3 };

/// Runs one command line (args exclude the program name). Results go to
/// `out` unless -o names a file; errors are JSON lines on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace polyleon::cli
