#pragma once

// `ccn` command line: gen-bench | train-controller | run-eval | serve | report.
//
// Exit codes: 0 ok, 1 usage, 2 data, 3 backend, 4 internal.

namespace ccn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitInternal = 4;

int run_cli(int argc, const char* const* argv);

}  // namespace ccn
