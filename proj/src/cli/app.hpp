#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sloppykit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDomain = 3;

/// Full command-line entry point: `sloppykit <command> --config <path> [--out <dir>]`.
int run(int argc, char** argv);

/// Same, for an argument list without the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sloppykit::cli
