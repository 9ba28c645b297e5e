#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rhseg::cli {

// Exit codes: 0 success or help, 1 usage error, 2 runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rhseg::cli
