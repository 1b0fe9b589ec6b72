#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mssp {

/// Command-line dispatch for all subcommands; returns the process exit code.
/// Errors are reported as a one-line diagnostic on `err` naming the violated
/// invariant.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

} // namespace mssp
