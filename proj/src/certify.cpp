#include "nlperim/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "nlperim/convolution.hpp"
#include "nlperim/error.hpp"
#include "nlperim/perimeter.hpp"

namespace nlperim {

PotentialAudit potential_audit(const Field& f, const KernelTable& kernel) {
  if (!kernel.integrable()) throw DomainError("potential_audit requires an integrable kernel");
  require_same_grid(f.grid(), kernel.grid(), "potential_audit");
  const GridSpec& g = f.grid();
  const Field v = convolve(f, kernel);
  PotentialAudit out;
  out.v_min = v.min();
  out.v_max = v.max();
  out.upper_bound = kernel.l1_norm() + 1e-10;
  out.bounds_ok = out.v_min >= 0.0 && out.v_max <= out.upper_bound;

  const double m = mass(f);
  out.v_mass = mass(v);
  out.expected_mass = m * kernel.l1_norm();
  if (g.mode == BoundaryMode::kFree) {
    const Field inside = convolve(Field(g, 1.0), kernel);
    std::vector<double> terms(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
      terms[i] = f[i] * std::max(0.0, kernel.mass_factor() - inside[i]);
    out.tail_deficit = g.cell_volume() * stable_sum(terms);

    double shell = 0.0;
    const int n = g.cells_per_side;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Index3 idx = g.unravel(i);
      bool outer = false;
      for (int d = 0; d < g.dimension; ++d) outer = outer || idx[d] == 0 || idx[d] == n - 1;
      if (outer) shell = std::max(shell, v[i]);
    }
    out.boundary_shell_max = shell;
  }
  // The discrete identity h^N sum V = m * mass_factor - deficit is exact; the
  // remaining gap to m ||K||_1 is the tabulation error of the kernel mass.
  out.mass_tolerance = out.tail_deficit + m * std::abs(kernel.mass_factor() - kernel.l1_norm()) +
                       1e-10 * std::max(1.0, out.expected_mass);
  out.mass_ok = std::abs(out.v_mass - out.expected_mass) <= out.mass_tolerance;
  return out;
}

SecondVariation second_variation_probe(const Field& f, const KernelTable& kernel, int trials,
                                       std::uint64_t seed, double tol_f) {
  std::vector<std::size_t> region;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] > tol_f && f[i] < 1.0 - tol_f) region.push_back(i);
  SecondVariation out;
  out.trials = trials;
  if (region.empty()) {
    out.vacuous = true;
    return out;
  }
  out.sv_max = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(t));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> xi(region.size());
    for (double& x : xi) x = uni(rng);
    const double mean = stable_sum(xi) / static_cast<double>(xi.size());
    double peak = 0.0;
    for (double& x : xi) {
      x -= mean;
      peak = std::max(peak, std::abs(x));
    }
    Field field(f.grid());
    if (peak > 0.0)
      for (std::size_t k = 0; k < region.size(); ++k) field[region[k]] = xi[k] / peak;
    out.sv_max = std::max(out.sv_max, quadratic_form(field, field, kernel));
  }
  if (trials <= 0) out.sv_max = 0.0;
  return out;
}

SupportCheck compact_support_check(const Field& f, double tol_f) {
  SupportCheck out;
  const GridSpec& g = f.grid();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] > tol_f) out.support_radius = std::max(out.support_radius, norm(g.center(i), g.dimension));
  out.ok = out.support_radius <= 0.9 * g.half_width();
  return out;
}

Certificate first_variation_certificate(const Field& f, const KernelTable& kernel,
                                        const CertificateOptions& options) {
  if (!kernel.integrable())
    throw DomainError("first_variation_certificate requires an integrable kernel");
  require_same_grid(f.grid(), kernel.grid(), "first_variation_certificate");
  require_density(f, "first_variation_certificate");
  if (!(mass(f) > 0.0))
    throw DomainError("first_variation_certificate: f = 0 has no multiplier (c > 0 needs positive mass)");

  Certificate out;
  out.tol_f = options.tol_f;
  out.tol_v = options.tol_v < 0.0 ? kDefaultTolVFactor * kernel.l1_norm() : options.tol_v;
  const Field v = convolve(f, kernel);

  double min_s = std::numeric_limits<double>::infinity();
  double max_n = -std::numeric_limits<double>::infinity();
  std::vector<double> v_i;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] >= 1.0 - out.tol_f) {
      ++out.count_s;
      min_s = std::min(min_s, v[i]);
    } else if (f[i] <= out.tol_f) {
      ++out.count_n;
      max_n = std::max(max_n, v[i]);
    } else {
      ++out.count_i;
      v_i.push_back(v[i]);
    }
  }
  bool gap_ok = true;
  if (!v_i.empty()) {
    out.c = stable_sum(v_i) / static_cast<double>(v_i.size());
  } else if (out.count_s > 0 && out.count_n > 0) {
    out.c = 0.5 * (min_s + max_n);
    gap_ok = max_n <= min_s + out.tol_v;
  } else {
    out.c = out.count_s > 0 ? min_s : max_n;
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] >= 1.0 - out.tol_f) {
      out.viol_s = std::max(out.viol_s, out.c - v[i]);
    } else if (f[i] <= out.tol_f) {
      out.viol_n = std::max(out.viol_n, v[i] - out.c);
    } else {
      out.viol_i = std::max(out.viol_i, std::abs(v[i] - out.c));
    }
  }

  const SupportCheck support = compact_support_check(f, out.tol_f);
  out.support_radius = support.support_radius;
  out.box_radius = f.grid().half_width();
  const SecondVariation sv =
      second_variation_probe(f, kernel, options.sv_trials, options.seed, out.tol_f);
  out.sv_max = sv.sv_max;
  out.sv_vacuous = sv.vacuous;

  const bool support_ok =
      f.grid().mode == BoundaryMode::kPeriodic || out.support_radius < out.box_radius;
  out.passed = out.viol_s <= out.tol_v && out.viol_n <= out.tol_v && out.viol_i <= out.tol_v &&
               out.sv_max <= out.tol_v && support_ok && gap_ok;
  return out;
}

double median(const Field& u) {
  if (u.grid().mode != BoundaryMode::kFree) {
    throw StructuralError("median is defined for free-mode fields only (a torus has no "
                          "infinite-measure complement)");
  }
  return 0.0;
}

double fit_poincare_constant(const ProfileTable& profile, double k) {
  if (profile.masses.empty()) throw DomainError("fit_poincare_constant: empty profile");
  if (!(k >= 1.0)) throw DomainError("fit_poincare_constant needs k >= 1");
  double c = 0.0;
  for (std::size_t i = 0; i < profile.masses.size(); ++i) {
    const double g = profile.g_values[i];
    if (!(g > 0.0)) throw DomainError("fit_poincare_constant: profile has g(m) <= 0");
    c = std::max(c, std::pow(profile.masses[i], k) / g);
  }
  return c;
}

PoincareReport poincare_check(const Field& u, const KernelTable& kernel, double k, double c,
                              int thresholds, double c_iso) {
  const double med = median(u);
  const GridSpec& g = u.grid();
  std::vector<double> terms(u.size());
  std::size_t support = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    terms[i] = std::pow(std::abs(u[i] - med), k);
    if (u[i] != 0.0) ++support;
  }
  PoincareReport out;
  out.lhs = std::pow(g.cell_volume() * stable_sum(terms), 1.0 / k);
  out.rhs = c * j_functional(u, kernel, thresholds);
  const double supp_mass = static_cast<double>(support) * g.cell_volume();
  out.allowance =
      c_iso * g.spacing / std::max(std::pow(supp_mass, 1.0 / g.dimension), g.spacing);
  out.ok = out.lhs <= out.rhs * (1.0 + out.allowance);
  return out;
}

}  // namespace nlperim
