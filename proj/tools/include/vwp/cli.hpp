#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vwp {

/// Runs the command line (args excludes the program name). Returns the
/// process exit code: 0 ok, 1 usage or config, 2 data, 3 numeric or training.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "key=value" lines, '#' comments and blank lines ignored. Returns the
/// equivalent "--key=value" arguments in file order.
std::vector<std::string> config_file_args(const std::string& path);

}  // namespace vwp
