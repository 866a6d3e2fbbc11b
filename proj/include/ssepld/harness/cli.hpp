#pragma once

#include <iosfwd>

namespace ssepld::harness {

// Exit codes: 0 every check passed, 1 a check failed (or the run failed),
// 2 usage or configuration error.
inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitUsage = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ssepld::harness
