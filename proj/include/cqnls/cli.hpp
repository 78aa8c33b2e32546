#pragma once

// Command-line entry point; returns the process exit code:
//   0 ok, 1 invariant failure, 2 validation error, 3 missing artifact,
//   4 numeric failure.

namespace cqnls {

int run_cli(int argc, const char* const* argv);

} // namespace cqnls
