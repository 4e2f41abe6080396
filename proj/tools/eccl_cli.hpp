// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

namespace eccl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point for the eccl tool. Subcommands: run, gen, evolve, eval, export.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eccl::cli
