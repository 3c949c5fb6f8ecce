#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pnorm::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 2,
    kNotConverged = 3,
    kVerificationFailed = 4,
};

/// Runs one command line (args excludes the program name). Everything the
/// command prints goes to `out` or `err`; files go under --out.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pnorm::cli
