#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace threadcast::cli {

// One invocation; `args` excludes the program name and may start with
// "--threads N". Returns the process exit code: 0 ok, 1 stage failure,
// 2 usage error, 3 replay mismatch.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace threadcast::cli
