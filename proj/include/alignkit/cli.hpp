#pragma once

#include <string>
#include <vector>

namespace alignkit::cli {

// Dispatches the alignkit subcommands. Exit codes: 0 success, 1 usage error,
// 2 data error, 3 numeric failure.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace alignkit::cli
