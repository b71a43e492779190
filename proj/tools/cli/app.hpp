#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace collabrep::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDataError = 3, kNumerical = 4, kInternal = 1 };

// Full command-line entry point; args excludes the program name.
int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace collabrep::cli
