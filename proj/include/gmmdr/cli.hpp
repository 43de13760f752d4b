#pragma once

// Command-line front end. Exit codes: 0 success, 1 usage or invalid
// argument, 2 file or format problem, 3 numerical failure.

#include <ostream>

namespace gmmdr {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitNumeric = 3;

/// Runs one subcommand (fit, reduce, select, simulate, evaluate,
/// benchmark). Reports go to `out`; progress and errors go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gmmdr
