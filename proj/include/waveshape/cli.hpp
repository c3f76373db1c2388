#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace waveshape {

// Full command-line front end, callable in-process for tests. `args` is the
// argument list without the program name. Writes the JSON report (or CSV for
// a bare generate) to `out` and diagnostics to `err`.
//
// Exit codes: 0 success, 1 failed permutation-invariance check, 2 usage or
// invalid configuration, 3 data error, 4 numeric failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

extern const char* const kToolVersion;

}  // namespace waveshape
