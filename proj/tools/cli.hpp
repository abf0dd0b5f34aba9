#pragma once

#include <string>
#include <vector>

namespace fxvol::cli {

/// Runs one `fxvol` invocation; args excludes the program name. Returns the
/// process exit code (0 ok, 1 usage/config, 2 data, 3 numeric).
int run(const std::vector<std::string>& args);

}  // namespace fxvol::cli
