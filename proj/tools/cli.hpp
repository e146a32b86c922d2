#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace planloc::cli {

// Runs one toolkit command; `args` excludes the program name. Returns the
// process exit code: 0 on success, 1 on a runtime failure, 2 on a usage
// error. Failures print a single `error: ...` line to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace planloc::cli
