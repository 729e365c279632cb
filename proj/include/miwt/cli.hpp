#pragma once

#include <iosfwd>
#include <memory>
#include <ostream>

#include "miwt/config.hpp"
#include "miwt/domain.hpp"

namespace miwt {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitCompute = 1, kExitInput = 2 };

/// Builds the product domain of a run: loads or generates meshes, applies
/// edge-length overrides, loads cached distances when present and computes
/// them otherwise. Warnings (e.g. disconnected meshes) go to `log`.
ProductDomain build_domain(const RunConfig& config, unsigned threads, std::ostream& log);

/// Entry point of the `miwt` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace miwt
