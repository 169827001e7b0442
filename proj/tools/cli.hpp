#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace csispeed::cli {

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "CSISPEED_CONFIG";

/// Runs the command line `args` (without the program name). Results go to `out`
/// unless a command writes files; failures print one JSON object to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace csispeed::cli
