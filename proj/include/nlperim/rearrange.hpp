#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlperim/grid.hpp"
#include "nlperim/kernels.hpp"

namespace nlperim {

/// Volume of the Euclidean unit ball in dimension N.
double unit_ball_volume(int dimension);

struct DiscreteBall {
  Field field;
  double target_mass = 0.0;
  double achieved_mass = 0.0;
  double radius = 0.0;
};

/// Cells whose centers lie within (m / omega_N)^(1/N) of `center`.
/// Throws ConstraintError when that ball leaves the box.
DiscreteBall ball_indicator(const GridSpec& grid, double m, const Point3& center = {0, 0, 0});

/// The first `cells` cells ordered by distance of their centers from the
/// origin, ties broken lexicographically.
Field centered_cells(const GridSpec& grid, std::size_t cells);

/// Centered discrete ball with the cell count of E.
Field rearrange_set(const Field& set);

struct ProfileTable {
  std::string kernel_id;
  std::vector<double> masses;    // achieved discrete masses, strictly increasing
  std::vector<double> g_values;  // Per_{K*}(B_m)
  double l1_norm = 0.0;
};

/// g(m) = Per_{K*}(B_m) on centered discrete balls of round(m / h^N) cells.
/// Requested masses that round to the same cell count are merged.
ProfileTable isoperimetric_profile(const KernelTable& kernel, std::span<const double> masses);

/// Columns m, g, g_over_m, bound (= ||K||_1 m).
void write_profile_csv(std::ostream& os, const ProfileTable& profile);

inline constexpr double kDefaultIsoConstant = 4.0;

/// C_iso h m^((N-1)/N) ||K||_1: the interface-band discretization allowance.
double iso_tolerance(const GridSpec& grid, double m, double l1_norm,
                     double c_iso = kDefaultIsoConstant);

struct IsoperimetricReport {
  double per = 0.0;
  double bound = 0.0;  // Per_{K*}(E*)
  double slack = 0.0;
  double tolerance = 0.0;
  bool violated = false;
};

/// `rearranged` must be rearrange_kernel(kernel); pass it to amortize.
IsoperimetricReport isoperimetric_check(const Field& set, const KernelTable& kernel,
                                        const KernelTable& rearranged,
                                        double c_iso = kDefaultIsoConstant);
IsoperimetricReport isoperimetric_check(const Field& set, const KernelTable& kernel,
                                        double c_iso = kDefaultIsoConstant);

struct RieszReport {
  double lhs = 0.0;  // Q(1_E, 1_E; K)
  double rhs = 0.0;  // Q(1_E*, 1_E*; K*)
  double tolerance = 0.0;
  bool ok = false;
};

RieszReport riesz_check(const Field& set, const KernelTable& kernel, const KernelTable& rearranged,
                        double c_iso = kDefaultIsoConstant);
RieszReport riesz_check(const Field& set, const KernelTable& kernel,
                        double c_iso = kDefaultIsoConstant);

}  // namespace nlperim
