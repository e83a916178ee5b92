#pragma once

#include <iosfwd>

namespace tokenaudit::cli {

// Exit codes: 0 success, 1 invalid data or processing error, 2 bad usage or
// an input/output file that cannot be opened.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

// Entry point shared by the executable and in-process tests. Data goes to
// `out` (or the -o file), diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tokenaudit::cli
