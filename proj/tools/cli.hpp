#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chemlambda::cli {

/// Exit codes: 0 success, 1 invalid input (bad molecule, failed
/// validation, unreadable file), 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chemlambda::cli
