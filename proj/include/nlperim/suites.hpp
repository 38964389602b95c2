#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nlperim/grid.hpp"
#include "nlperim/kernels.hpp"

namespace nlperim {

struct SuiteOptions {
  int trials = 50;
  int thresholds = 256;
  double c_iso = 4.0;
  std::uint64_t seed = 0;
  /// Prefix mixed into every inputs hash (the canonical config text).
  std::string context;
};

struct SuiteResult {
  std::string name;
  std::string invariant;  // what a failure violates
  bool passed = false;
  bool skipped = false;
  int trials = 0;
  int failures = 0;
  double worst = 0.0;      // largest normalized violation measure seen
  double tolerance = 0.0;  // threshold worst is compared against
  std::string detail;
  std::string inputs_hash;    // FNV-1a of (context, suite, seed)
  std::string failing_input;  // hash of the first failing field, if any
};

/// Names in execution order: oracle_convolution, complement, submodularity,
/// coarea, isoperimetric, riesz, poincare, subadditivity.
const std::vector<std::string>& suite_names();

/// Runs one property suite for the kernel on the grid. Tables the suite
/// needs (periodic copy, rearrangement, coarser oracle grid) are built
/// internally. Throws ConfigError for an unknown suite name.
SuiteResult run_suite(const std::string& name, const KernelSpec& spec, const GridSpec& grid,
                      const SuiteOptions& options);

std::string field_hash(const Field& f);

}  // namespace nlperim
