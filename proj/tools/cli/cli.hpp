#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace animgan::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Runs one command. Results go to out, diagnostics (one JSON object per line) to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace animgan::cli
