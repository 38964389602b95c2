#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlperim/certify.hpp"
#include "nlperim/grid.hpp"
#include "nlperim/kernels.hpp"
#include "nlperim/solver.hpp"

namespace nlperim {

enum class Command { kKernel, kPerimeter, kProfile, kMinimize, kCertify, kCheck };

const char* to_string(Command c);

struct KernelBlock {
  KernelSpec spec;
  std::optional<double> eps;  // truncation min(K, 1/eps)
  int refined_radius = -1;
  KernelSpec effective() const { return eps ? truncate(spec, *eps) : spec; }
};

struct ProfileBlock {
  std::vector<double> masses;
  double c_iso = 4.0;
};

struct CheckBlock {
  int trials = 50;
  int thresholds = 256;
  double c_iso = 4.0;
  std::vector<std::string> suites;  // empty: all
};

/// Validated run description. Paths are resolved against the config file's
/// directory.
struct RunConfig {
  Command command = Command::kCheck;
  std::uint64_t seed = 0;
  std::string output = "nlperim-out";
  std::vector<std::string> formats{"json"};
  KernelBlock kernel;
  GridSpec grid;
  std::optional<SolverConfig> solver;
  std::string solver_initial_path;
  CertificateOptions certify;
  std::string certify_input;
  std::string perimeter_input;
  ProfileBlock profile;
  CheckBlock check;
  /// Normalized "section.key=value" lines, the basis of input hashes.
  std::string canonical;

  bool wants(const std::string& format) const;
};

/// Parses the INI-style grammar:
///   top-level keys: command, seed, output, formats
///   [kernel] [grid] [solver] [certify] [perimeter] [profile] [check]
/// Unknown keys and sections are errors naming the nearest valid key.
/// Throws ConfigError with a line number.
RunConfig parse_config(std::string_view text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Splits "json,csv" and rejects names outside {json, csv, nlpg1}.
std::vector<std::string> parse_formats(const std::string& list);

/// Valid key names for a section ("" for the top level).
const std::vector<std::string>& config_keys(const std::string& section);

/// Levenshtein-nearest candidate.
std::string nearest(const std::string& word, const std::vector<std::string>& candidates);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace nlperim
