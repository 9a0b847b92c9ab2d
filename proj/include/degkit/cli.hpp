// Command-line front end. `run` is the whole program minus main() so tests
// can drive it in-process.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace degkit {

/// Exit codes: 0 success, 1 invalid input data, 2 usage error.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace degkit
