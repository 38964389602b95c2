#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nlperim/certify.hpp"
#include "nlperim/grid.hpp"
#include "nlperim/kernels.hpp"

namespace nlperim {

enum class AscentMethod { kProjectedGradient, kFrankWolfe };
enum class InitKind { kBall, kRandom, kFile };

const char* to_string(AscentMethod m);
const char* to_string(InitKind k);

struct SolverConfig {
  AscentMethod method = AscentMethod::kFrankWolfe;
  InitKind init = InitKind::kBall;
  double target_mass = 1.0;
  int max_iters = 500;
  double stop_tol = 1e-10;
  int restarts = 1;
  std::uint64_t seed = 0;
  /// Starting density for InitKind::kFile (projected onto the mass constraint).
  std::optional<Field> initial;
  CertificateOptions certificate;

  void validate(const GridSpec& grid) const;
};

struct RunSummary {
  int index = 0;
  double energy = 0.0;
  int iterations = 0;
  bool stagnated = false;
};

struct SolverResult {
  Field f;
  double energy = 0.0;  // P_K(f)
  double quad = 0.0;    // Q(f, f)
  std::vector<double> history;
  bool converged = false;
  int best_of = 0;
  int iterations = 0;
  Certificate certificate;
  std::vector<RunSummary> runs;
};

/// Euclidean projection onto {0 <= f <= 1, mass(f) = m}: clip(g - tau, 0, 1)
/// with tau from the sorted breakpoints {g_i, g_i - 1}.
Field project_capped_simplex(const Field& g, double m);

/// Maximizer of h^N sum V s over {0 <= s <= 1, mass(s) = m}: ones on the
/// largest values of V (ties by lexicographic index), one fractional cell.
Field bathtub_argmax(const Field& v, double m);

/// One projected-gradient ascent step on Q(f, f) with backtracking from
/// eta_0 = 1 / (2 ||K||_1).
Field ascent_step_pg(const Field& f, const KernelTable& kernel, double m);

/// One Frank-Wolfe step with exact line search.
Field ascent_step_fw(const Field& f, const KernelTable& kernel, double m);

/// Density of mass m filling cells by distance from `center`.
Field ball_density(const GridSpec& grid, double m, const Point3& center = {0, 0, 0});

/// Multi-start constrained ascent; the best run wins by (energy, index).
SolverResult minimize(const SolverConfig& config, const KernelTable& kernel);

struct SubadditivityReport {
  double m1 = 0.0;
  double m2 = 0.0;
  double quad_m1 = 0.0;
  double quad_m2 = 0.0;
  double quad_sum = 0.0;  // maximal Q at mass m1 + m2
  double eps_tail = 0.0;
  bool monotone = false;
  bool superadditive = false;
  double gap = 0.0;  // quad_sum - quad_m1 - quad_m2
};

/// Solves the three problems independently. Throws ConstraintError unless
/// balls of masses m1 and m2 fit in the box with a gap of half the box side.
SubadditivityReport subadditivity_probe(const KernelTable& kernel, double m1, double m2,
                                        const SolverConfig& base);

struct LadderReport {
  std::vector<double> masses;  // k * m0, k = 1..points
  std::vector<double> quads;   // maximal Q at each mass
  std::vector<SubadditivityReport> pairs;  // (m_i, m_j) with i <= j, i + j <= points
  double eps_tail = 0.0;  // kernel_mass_beyond(half box side) per unit mass
  bool monotone = false;
  bool superadditive = false;
};

/// Largest m0 for which every ladder pair satisfies the separation
/// requirement of subadditivity_probe.
double ladder_base_mass(const GridSpec& grid, int points);

/// Solves the ladder masses once each and checks monotonicity between
/// neighbours and superadditivity up to eps_tail on every pair whose sum is
/// on the ladder.
LadderReport subadditivity_ladder(const KernelTable& kernel, double m0, int points,
                                  const SolverConfig& base);

/// Kernel mass at offsets of length >= d, plus the stored-cube tail.
double kernel_mass_beyond(const KernelTable& kernel, double d);

}  // namespace nlperim
