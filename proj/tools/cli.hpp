#pragma once

#include <ostream>

namespace specdet {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_runtime = 2;

/// Entry point of the `specdet` tool. Subcommands: generate, eigs, calibrate,
/// detect, mc, verify.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace specdet
