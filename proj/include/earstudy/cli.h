#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace earstudy {

/// Command-line entry point. `args` excludes the program name. Returns the
/// process exit code: 0 success, 1 configuration error, 2 data error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace earstudy
