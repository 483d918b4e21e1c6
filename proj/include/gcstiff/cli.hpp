#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gcstiff {

/// Entry point of the command-line tool. Returns the process exit status:
/// 0 on success, otherwise the ErrorCategory code of the failure.
int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gcstiff
