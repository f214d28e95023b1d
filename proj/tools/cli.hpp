#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace methsnp::cli {

// Runs one subcommand. Results go to `out`, diagnostics to `err`. Returns 0 on
// success, 1 on usage errors, 2 on data errors, 3 on numerical failures.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace methsnp::cli
