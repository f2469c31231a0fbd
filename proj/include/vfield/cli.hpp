#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vfield {

/// Entry point shared by the `vfield` binary and the CLI tests. `args` are
/// the command-line arguments without the program name. All human output goes
/// to `out`; errors and CLI11 usage messages go to `err`.
///
/// Exit codes: 0 on success, 2 for usage problems (bad flags, unknown
/// configuration keys, missing input files), 1 for runtime failures
/// (malformed inputs, checkpoint/config mismatches, failed self-checks).
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vfield
