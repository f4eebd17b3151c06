#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pbf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point shared by the `pbf` executable and the tests. `args` does
/// not include the program name.
///
///   run      --config <preset|file> [--runs N] [--seed S] [--out DIR]
///            [--particles N] [--pd-interval LO,HI] [--sup-mode MODE]
///            [--alpha MODE] [--trace] [--validate-only]
///            [--threads T]
///   validate --config <preset|file>
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pbf::cli
