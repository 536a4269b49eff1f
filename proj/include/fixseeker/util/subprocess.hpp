#pragma once

#include <string>
#include <vector>

namespace fixseeker::util {

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs argv[0] (searched on PATH) with no shell involved and collects both
/// output streams. `extra_env` entries ("KEY=VALUE") are appended to the
/// inherited environment. Throws std::system_error if the process cannot be
/// spawned.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::vector<std::string>& extra_env = {});

}  // namespace fixseeker::util
