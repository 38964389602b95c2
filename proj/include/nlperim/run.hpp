#pragma once

#include <iosfwd>

#include "nlperim/config.hpp"

namespace nlperim {

enum ExitCode : int {
  kExitPass = 0,
  kExitViolation = 1,
  kExitConfig = 2,
  kExitNumerical = 3,
};

/// Executes the configured command, writes the requested artifacts into
/// config.output and a human-readable summary to `log`. Returns the exit
/// code; library errors propagate to the caller.
int run(const RunConfig& config, std::ostream& log);

/// The JSON report run() writes to report.json, without touching the disk.
/// Identical configs give byte-identical text.
std::string render_report(const RunConfig& config, int* exit_code = nullptr);

/// Input hash of a run: FNV-1a over the canonical config and the seed.
std::string inputs_hash(const RunConfig& config);

}  // namespace nlperim
