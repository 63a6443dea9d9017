#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rtphase {

enum Exit_code : int { exit_ok = 0, exit_user_error = 1, exit_runtime_failure = 2 };

// `args` excludes the program name. Returns the process exit code.
auto run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) -> int;

}  // namespace rtphase
