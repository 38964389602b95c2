#include "nlperim/perimeter.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>
#include <vector>

#include "nlperim/convolution.hpp"
#include "nlperim/error.hpp"

namespace nlperim {

namespace {

constexpr std::size_t kDirectLimit = 4096;
constexpr std::size_t kCoareaDirectLimit = 16384;

Index3 offset_between(const GridSpec& g, std::size_t x, std::size_t y) {
  const Index3 a = g.unravel(x);
  const Index3 b = g.unravel(y);
  Index3 z{0, 0, 0};
  for (int d = 0; d < g.dimension; ++d) z[d] = a[d] - b[d];
  return z;
}

double dot(const Field& a, const Field& b) {
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * b[i];
  return a.grid().cell_volume() * stable_sum(prod);
}

// Exterior interaction ext(x) = int_{outside box} K(x - y) dy for each cell.
Field exterior_weights(const GridSpec& g, const KernelTable& kernel) {
  if (!kernel.integrable()) return Field(g, kernel.far_tail());
  const Field inside = convolve(Field(g, 1.0), kernel);
  Field ext(g);
  for (std::size_t i = 0; i < g.size(); ++i) ext[i] = std::max(0.0, kernel.mass_factor() - inside[i]);
  return ext;
}

Field level_set(const Field& u, double s) {
  Field e(u.grid());
  if (s >= 0.0 || u.grid().mode == BoundaryMode::kPeriodic) {
    for (std::size_t i = 0; i < u.size(); ++i) e[i] = u[i] > s ? 1.0 : 0.0;
  } else {
    // {u > s} contains the whole exterior; use its complement {u <= s}.
    for (std::size_t i = 0; i < u.size(); ++i) e[i] = u[i] <= s ? 1.0 : 0.0;
  }
  return e;
}

}  // namespace

void require_indicator(const Field& f, const char* what) {
  if (!f.is_indicator()) {
    throw DomainError(std::string(what) +
                      " needs an indicator field (values 0 or 1); densities are only admitted "
                      "through relaxed_energy with an integrable kernel");
  }
}

void require_density(const Field& f, const char* what) {
  if (f.size() == 0) return;
  const double lo = f.min();
  const double hi = f.max();
  if (lo < 0.0 || hi > 1.0) {
    std::ostringstream os;
    os << what << ": density must take values in [0,1], found "
       << (lo < 0.0 ? "min " : "max ") << (lo < 0.0 ? lo : hi);
    throw ConstraintError(os.str());
  }
}

double quadratic_form(const Field& f, const Field& g, const KernelTable& kernel) {
  require_same_grid(f.grid(), g.grid(), "quadratic_form");
  require_same_grid(f.grid(), kernel.grid(), "quadratic_form");
  const double fg = dot(f, convolve(g, kernel));
  if (&f == &g) return fg;
  const double gf = dot(g, convolve(f, kernel));
  return 0.5 * (fg + gf);
}

PerimeterReport perimeter_report(const Field& set, const KernelTable& kernel) {
  require_same_grid(set.grid(), kernel.grid(), "perimeter_set");
  if (!set.is_indicator()) {
    if (!kernel.integrable()) {
      throw DomainError(
          "perimeter_set: density field with a non-integrable kernel; the relaxed energy "
          "requires K in L^1");
    }
    require_indicator(set, "perimeter_set");
  }
  const GridSpec& g = set.grid();
  const bool free = g.mode == BoundaryMode::kFree;
  const double m = mass(set);
  PerimeterReport out;
  out.tail_flagged = free && kernel.tail_flagged();

  if (kernel.integrable()) {
    out.path = "mass-identity";
    out.tail_correction = free ? m * kernel.tail_moment() : 0.0;
    out.value = std::max(0.0, m * kernel.mass_factor() - quadratic_form(set, set, kernel));
    return out;
  }

  double inner = 0.0;
  if (g.size() <= kDirectLimit) {
    out.path = "direct";
    std::vector<double> rows;
    rows.reserve(g.size());
    for (std::size_t x = 0; x < g.size(); ++x) {
      if (set[x] == 0.0) continue;
      double row = 0.0;
      for (std::size_t y = 0; y < g.size(); ++y) {
        if (set[y] != 0.0) continue;
        row += kernel.value(offset_between(g, x, y));
      }
      rows.push_back(row);
    }
    inner = g.cell_volume() * g.cell_volume() * stable_sum(rows);
  } else {
    out.path = "fft";
    Field complement(g);
    for (std::size_t i = 0; i < g.size(); ++i) complement[i] = 1.0 - set[i];
    inner = dot(set, convolve(complement, kernel));
  }
  out.tail_correction = free ? m * kernel.far_tail() : 0.0;
  out.value = std::max(0.0, inner + out.tail_correction);
  return out;
}

double perimeter_set(const Field& set, const KernelTable& kernel) {
  return perimeter_report(set, kernel).value;
}

double relaxed_energy(const Field& f, const KernelTable& kernel) {
  require_same_grid(f.grid(), kernel.grid(), "relaxed_energy");
  if (!kernel.integrable()) {
    throw DomainError("relaxed_energy requires an integrable kernel (K in L^1)");
  }
  require_density(f, "relaxed_energy");
  return std::max(0.0, mass(f) * kernel.mass_factor() - quadratic_form(f, f, kernel));
}

double j_direct(const Field& u, const KernelTable& kernel) {
  require_same_grid(u.grid(), kernel.grid(), "j_functional");
  const GridSpec& g = u.grid();
  if (g.size() > kCoareaDirectLimit) {
    throw StructuralError("direct J_K evaluation is limited to " +
                          std::to_string(kCoareaDirectLimit) + " cells");
  }
  std::vector<double> rows(g.size(), 0.0);
  for (std::size_t x = 0; x < g.size(); ++x) {
    double row = 0.0;
    for (std::size_t y = x + 1; y < g.size(); ++y) {
      const double du = std::abs(u[x] - u[y]);
      if (du != 0.0) row += du * kernel.value(offset_between(g, x, y));
    }
    rows[x] = row;
  }
  const double hv = g.cell_volume();
  double total = hv * hv * stable_sum(rows);
  if (g.mode == BoundaryMode::kFree) {
    const Field ext = exterior_weights(g, kernel);
    std::vector<double> terms(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) terms[i] = std::abs(u[i]) * ext[i];
    total += hv * stable_sum(terms);
  }
  return total;
}

double j_coarea(const Field& u, const KernelTable& kernel, int thresholds) {
  require_same_grid(u.grid(), kernel.grid(), "j_functional");
  if (thresholds < 2) throw DomainError("coarea quadrature needs at least 2 thresholds");
  const bool free = u.grid().mode == BoundaryMode::kFree;
  std::set<double> levels(u.values().begin(), u.values().end());
  if (free) levels.insert(0.0);
  if (levels.size() <= 1) return 0.0;

  std::vector<double> parts;
  if (levels.size() - 1 <= static_cast<std::size_t>(thresholds)) {
    // Per({u > s}) is constant between consecutive levels.
    auto it = levels.begin();
    double prev = *it++;
    for (; it != levels.end(); ++it) {
      const double mid = 0.5 * (prev + *it);
      parts.push_back((*it - prev) * perimeter_set(level_set(u, mid), kernel));
      prev = *it;
    }
  } else {
    const double lo = free ? std::min(0.0, *levels.begin()) : *levels.begin();
    const double hi = free ? std::max(0.0, *levels.rbegin()) : *levels.rbegin();
    // Bins never straddle 0: in free mode the level sets switch family
    // there, and zero backgrounds put a large jump of Per({u > s}) at 0.
    std::vector<double> edges;
    auto add_edges = [&](double a, double b, int bins) {
      for (int k = 0; k < bins; ++k) edges.push_back(a + (b - a) * k / bins);
    };
    if (lo < 0.0 && hi > 0.0) {
      const int neg = std::clamp(static_cast<int>(std::lround(thresholds * -lo / (hi - lo))), 1,
                                 thresholds - 1);
      add_edges(lo, 0.0, neg);
      add_edges(0.0, hi, thresholds - neg);
    } else {
      add_edges(lo, hi, thresholds);
    }
    edges.push_back(hi);

    const double hv = u.grid().cell_volume();
    const double k0 = kernel.value({0, 0, 0});
    // w(x): interaction of cell x with everything, so Per(E) = sum_E hv (w - V_E).
    Field w = convolve(Field(u.grid(), 1.0), kernel);
    if (free) {
      const Field ext = exterior_weights(u.grid(), kernel);
      for (std::size_t i = 0; i < u.size(); ++i) w[i] += ext[i];
    }
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
      const double a = edges[b];
      const double c = edges[b + 1];
      const double mid = 0.5 * (a + c);
      const bool complement = free && mid < 0.0;
      const Field e = level_set(u, mid);
      const Field v = convolve(e, kernel);
      std::vector<double> terms;
      for (std::size_t i = 0; i < u.size(); ++i) {
        if (e[i] != 0.0) terms.push_back(hv * (w[i] - v[i]));
        const double l = u[i];
        if (!(l > a && l < c)) continue;
        // Cells crossing the level inside the bin belong to the midpoint set
        // for only part of it; charge their first variation for that part.
        const double join = hv * (w[i] - 2.0 * v[i] - hv * k0);
        const double leave = hv * (2.0 * v[i] - w[i] - hv * k0);
        if (l <= mid) {
          terms.push_back((l - a) / (c - a) * (complement ? leave : join));
        } else {
          terms.push_back((c - l) / (c - a) * (complement ? join : leave));
        }
      }
      parts.push_back((c - a) * stable_sum(terms));
    }
  }
  return stable_sum(parts);
}

double j_functional(const Field& u, const KernelTable& kernel, int thresholds) {
  if (thresholds < 2) throw DomainError("j_functional needs at least 2 thresholds");
  if (u.grid().size() <= kDirectLimit) return j_direct(u, kernel);
  return j_coarea(u, kernel, thresholds);
}

CoareaReport coarea_check(const Field& u, const KernelTable& kernel, int thresholds) {
  CoareaReport out;
  out.lhs = j_direct(u, kernel);
  out.rhs = j_coarea(u, kernel, thresholds);
  const double scale = std::max(std::abs(out.lhs), std::abs(out.rhs));
  out.rel_gap = scale > 0.0 ? std::abs(out.lhs - out.rhs) / scale : 0.0;
  return out;
}

SubmodularityReport submodularity_deficit(const Field& e, const Field& f, const KernelTable& kernel) {
  require_same_grid(e.grid(), f.grid(), "submodularity_deficit");
  require_indicator(e, "submodularity_deficit");
  require_indicator(f, "submodularity_deficit");
  const GridSpec& g = e.grid();
  Field both(g), either(g), e_only(g), f_only(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    both[i] = e[i] * f[i];
    either[i] = std::max(e[i], f[i]);
    e_only[i] = e[i] * (1.0 - f[i]);
    f_only[i] = f[i] * (1.0 - e[i]);
  }
  SubmodularityReport out;
  out.deficit = perimeter_set(e, kernel) + perimeter_set(f, kernel) - perimeter_set(both, kernel) -
                perimeter_set(either, kernel);
  out.cross_term = 2.0 * quadratic_form(e_only, f_only, kernel);
  return out;
}

}  // namespace nlperim
