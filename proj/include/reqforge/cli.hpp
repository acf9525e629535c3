#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "reqforge/config.hpp"

namespace reqforge::cli {

/// Exit codes: 0 success, 1 domain error, 2 usage error.
int run(const std::vector<std::string>& argv, const Environment& env, std::ostream& out, std::ostream& err);

/// Collects environ into a map.
Environment current_environment();

}  // namespace reqforge::cli
