#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gradtopo {

// Process exit codes.
inline constexpr int kExitConverged = 0;
inline constexpr int kExitError = 1;  // bad usage, invalid config, I/O or solver failure
inline constexpr int kExitIterationCap = 2;

/// Entry point of the gradtopo tool; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace gradtopo
