// cli.hpp - the seglab command line: simulate, serve, analyze, loadtest.
#pragma once

#include <iosfwd>

namespace seglab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Default for --data-dir when the flag is absent.
inline constexpr const char* kDataDirEnv = "SEGLAB_DATA_DIR";

/// Parses argv and runs one subcommand. Never throws.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace seglab::cli
