#include "nlperim/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nlperim/error.hpp"
#include "nlperim/perimeter.hpp"

namespace nlperim {

namespace {

// Cell indices sorted by distance from p, ties by index (lexicographic).
std::vector<std::size_t> cells_by_distance(const GridSpec& grid, const Point3& p) {
  std::vector<double> d2(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point3 x = grid.center(i);
    double s = 0.0;
    for (int d = 0; d < grid.dimension; ++d) s += (x[d] - p[d]) * (x[d] - p[d]);
    d2[i] = s;
  }
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d2[a] < d2[b]; });
  return order;
}

std::size_t cell_count(const Field& f) {
  return static_cast<std::size_t>(std::count(f.values().begin(), f.values().end(), 1.0));
}

}  // namespace

double unit_ball_volume(int dimension) {
  switch (dimension) {
    case 1:
      return 2.0;
    case 2:
      return std::numbers::pi;
    case 3:
      return 4.0 * std::numbers::pi / 3.0;
    default:
      throw StructuralError("dimension must be 1, 2 or 3");
  }
}

DiscreteBall ball_indicator(const GridSpec& grid, double m, const Point3& center) {
  grid.validate();
  if (!(m > 0.0)) throw ConstraintError("ball mass must be positive");
  const int dim = grid.dimension;
  const double r = std::pow(m / unit_ball_volume(dim), 1.0 / dim);
  for (int d = 0; d < dim; ++d) {
    if (std::abs(center[d]) + r > grid.half_width() * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "ball of mass " << m << " (radius " << r << ") does not fit in the box of half-width "
         << grid.half_width();
      throw ConstraintError(os.str());
    }
  }
  DiscreteBall out;
  out.field = Field(grid);
  out.target_mass = m;
  out.radius = r;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point3 x = grid.center(i);
    double s = 0.0;
    for (int d = 0; d < dim; ++d) s += (x[d] - center[d]) * (x[d] - center[d]);
    if (s <= r * r) out.field[i] = 1.0;
  }
  out.achieved_mass = mass(out.field);
  return out;
}

Field centered_cells(const GridSpec& grid, std::size_t cells) {
  if (cells > grid.size()) throw ConstraintError("more cells requested than the grid holds");
  Field out(grid);
  const auto order = cells_by_distance(grid, {0, 0, 0});
  for (std::size_t k = 0; k < cells; ++k) out[order[k]] = 1.0;
  return out;
}

Field rearrange_set(const Field& set) {
  require_indicator(set, "rearrange_set");
  return centered_cells(set.grid(), cell_count(set));
}

ProfileTable isoperimetric_profile(const KernelTable& kernel, std::span<const double> masses) {
  const GridSpec& grid = kernel.grid();
  const KernelTable rearranged = rearrange_kernel(kernel);
  std::vector<double> sorted(masses.begin(), masses.end());
  std::sort(sorted.begin(), sorted.end());

  ProfileTable out;
  out.kernel_id = kernel.kernel_id();
  out.l1_norm = kernel.l1_norm();
  const auto order = cells_by_distance(grid, {0, 0, 0});
  std::size_t last = 0;
  for (double m : sorted) {
    if (!(m > 0.0)) throw ConstraintError("profile masses must be positive");
    const double r = std::pow(m / unit_ball_volume(grid.dimension), 1.0 / grid.dimension);
    if (r > grid.half_width()) {
      std::ostringstream os;
      os << "profile mass " << m << " needs a ball of radius " << r
         << ", larger than the box half-width " << grid.half_width();
      throw ConstraintError(os.str());
    }
    const auto k = static_cast<std::size_t>(std::llround(m / grid.cell_volume()));
    if (k == 0 || k == last) continue;
    last = k;
    Field ball(grid);
    for (std::size_t i = 0; i < k; ++i) ball[order[i]] = 1.0;
    out.masses.push_back(mass(ball));
    out.g_values.push_back(perimeter_set(ball, rearranged));
  }
  return out;
}

void write_profile_csv(std::ostream& os, const ProfileTable& profile) {
  const auto old = os.precision(17);
  os << "m,g,g_over_m,bound\n";
  for (std::size_t i = 0; i < profile.masses.size(); ++i) {
    const double m = profile.masses[i];
    const double g = profile.g_values[i];
    os << m << ',' << g << ',' << g / m << ',' << profile.l1_norm * m << '\n';
  }
  os.precision(old);
}

double iso_tolerance(const GridSpec& grid, double m, double l1_norm, double c_iso) {
  const int dim = grid.dimension;
  return c_iso * grid.spacing * std::pow(m, (dim - 1.0) / dim) * l1_norm;
}

IsoperimetricReport isoperimetric_check(const Field& set, const KernelTable& kernel,
                                        const KernelTable& rearranged, double c_iso) {
  require_indicator(set, "isoperimetric_check");
  IsoperimetricReport out;
  out.per = perimeter_set(set, kernel);
  out.bound = perimeter_set(rearrange_set(set), rearranged);
  out.slack = out.per - out.bound;
  out.tolerance = iso_tolerance(set.grid(), mass(set), kernel.l1_norm(), c_iso);
  out.violated = out.slack < -out.tolerance;
  return out;
}

IsoperimetricReport isoperimetric_check(const Field& set, const KernelTable& kernel, double c_iso) {
  return isoperimetric_check(set, kernel, rearrange_kernel(kernel), c_iso);
}

RieszReport riesz_check(const Field& set, const KernelTable& kernel, const KernelTable& rearranged,
                        double c_iso) {
  require_indicator(set, "riesz_check");
  if (!kernel.integrable()) throw DomainError("riesz_check requires an integrable kernel");
  RieszReport out;
  out.lhs = quadratic_form(set, set, kernel);
  const Field star = rearrange_set(set);
  out.rhs = quadratic_form(star, star, rearranged);
  out.tolerance = iso_tolerance(set.grid(), mass(set), kernel.l1_norm(), c_iso);
  out.ok = out.lhs <= out.rhs + out.tolerance;
  return out;
}

RieszReport riesz_check(const Field& set, const KernelTable& kernel, double c_iso) {
  return riesz_check(set, kernel, rearrange_kernel(kernel), c_iso);
}

}  // namespace nlperim
