#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace flatmu::cli {

// args excludes the program name. Exit codes: 0 success or witness,
// 1 usage or IO error, 2 negative or inconclusive result.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flatmu::cli
