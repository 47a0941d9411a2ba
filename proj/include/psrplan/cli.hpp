#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace psrplan {

// Parses argv and dispatches to the requested subcommand. Returns the
// process exit status; diagnostics go to err.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace psrplan
