#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace synthctl::cli {

/// Runs one command line (without the program name). Returns the exit code:
/// 0 on success, 1 on user or input errors, 2 on internal failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace synthctl::cli
