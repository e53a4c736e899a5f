#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace arena {

// The `arena` command. Returns the process exit code: 0 when the workflow completed, 1 on a
// failed workflow (replay mismatch under --verify, unreadable data), 2 on usage or configuration
// errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace arena
