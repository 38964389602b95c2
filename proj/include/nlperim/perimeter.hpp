#pragma once

#include <string>

#include "nlperim/grid.hpp"
#include "nlperim/kernels.hpp"

namespace nlperim {

struct PerimeterReport {
  double value = 0.0;
  /// Interaction of E with the region outside the box (free mode only):
  /// mass(E) * tail_moment for integrable kernels, mass(E) * far_tail otherwise.
  double tail_correction = 0.0;
  bool tail_flagged = false;
  /// "mass-identity", "direct" or "fft".
  std::string path;
};

/// Per_K(E) for an indicator field. Integrable kernels use
/// mass(E) * mass_factor - Q(E, E); other kernels sum K over pairs (x in E,
/// y not in E), directly up to 4096 cells and through one convolution above.
/// Throws DomainError for non-indicator input.
PerimeterReport perimeter_report(const Field& set, const KernelTable& kernel);
double perimeter_set(const Field& set, const KernelTable& kernel);

/// P_K(f) = mass(f) * mass_factor - Q(f, f). Throws ConstraintError when f
/// leaves [0, 1] and DomainError for non-integrable kernels.
double relaxed_energy(const Field& f, const KernelTable& kernel);

/// h^N sum f (g * K), exactly symmetric in (f, g). Signed inputs allowed.
double quadratic_form(const Field& f, const Field& g, const KernelTable& kernel);

/// J_K(u) = 1/2 sum_x sum_y |u(x) - u(y)| K(x - y) h^2N, plus the interaction
/// with the zero extension outside the box in free mode.
double j_direct(const Field& u, const KernelTable& kernel);

/// Layer-cake quadrature of s -> Per_K({u > s}). When u takes at most
/// thresholds + 1 distinct levels (counting 0 in free mode) the integral is
/// evaluated exactly level by level. Otherwise `thresholds` bins, equal on
/// each side of 0, each take the perimeter at their midpoint plus the first
/// variation of the cells whose level falls inside the bin (a corrected
/// midpoint rule; the neglected terms are pair interactions among those
/// cells).
double j_coarea(const Field& u, const KernelTable& kernel, int thresholds);

/// Direct sum up to 4096 cells, coarea quadrature above.
double j_functional(const Field& u, const KernelTable& kernel, int thresholds);

struct CoareaReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_gap = 0.0;
};

CoareaReport coarea_check(const Field& u, const KernelTable& kernel, int thresholds);

struct SubmodularityReport {
  double deficit = 0.0;     // Per(E) + Per(F) - Per(E cap F) - Per(E cup F)
  double cross_term = 0.0;  // 2 Q(1_{E\F}, 1_{F\E})
};

SubmodularityReport submodularity_deficit(const Field& e, const Field& f, const KernelTable& kernel);

/// Throws DomainError unless every value is 0 or 1.
void require_indicator(const Field& f, const char* what);
/// Throws ConstraintError naming the offending extremum unless 0 <= f <= 1.
void require_density(const Field& f, const char* what);

}  // namespace nlperim
