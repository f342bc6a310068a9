#pragma once

#include <string>
#include <vector>

namespace ah {

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs argv[0] with the given arguments (PATH lookup applies), capturing
/// stdout and stderr until the child exits. Throws a tool error when the
/// process cannot be spawned at all; a nonzero exit is reported in the
/// result, not thrown.
ProcessResult run_process(const std::vector<std::string>& argv);

/// Renders argv for diagnostics.
std::string format_command(const std::vector<std::string>& argv);

}  // namespace ah
