// Acceptance run: one [PASS]/[FAIL] line per criterion, exit status 1 when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nlperim/certify.hpp"
#include "nlperim/convolution.hpp"
#include "nlperim/kernels.hpp"
#include "nlperim/perimeter.hpp"
#include "nlperim/rearrange.hpp"
#include "nlperim/samplers.hpp"
#include "nlperim/solver.hpp"
#include "oracles.hpp"

using namespace nlperim;

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << " FAILED: " << what << ';';
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void criterion(int id, const char* title, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = Clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.passed = false;
    out.detail << " exception: " << e.what();
  }
  std::printf("[%s] %2d %s (%.1f s)%s\n", out.passed ? "PASS" : "FAIL", id, title, seconds_since(t0),
              out.detail.str().c_str());
  std::fflush(stdout);
  if (!out.passed) ++failures;
}

Field complement(const Field& e) {
  Field c(e.grid());
  for (std::size_t i = 0; i < e.size(); ++i) c[i] = 1.0 - e[i];
  return c;
}

Field combine(const Field& a, const Field& b, double (*op)(double, double)) {
  Field c(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = op(a[i], b[i]);
  return c;
}

Point3 barycenter(const Field& f) {
  const GridSpec& g = f.grid();
  Point3 c{0, 0, 0};
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point3 x = g.center(i);
    for (int d = 0; d < g.dimension; ++d) c[d] += f[i] * x[d];
    total += f[i];
  }
  for (int d = 0; d < g.dimension; ++d) c[d] /= total;
  return c;
}

std::vector<double> geometric_masses(const GridSpec& g, int count, double top) {
  std::vector<double> m;
  const double lo = g.cell_volume();
  for (int k = 0; k < count; ++k) m.push_back(lo * std::pow(top / lo, double(k) / (count - 1)));
  return m;
}

// 1. FFT convolution vs the plain double sum.
void oracle_equivalence(Outcome& out) {
  struct Case {
    int dim, n;
    BoundaryMode mode;
    KernelSpec spec;
  };
  const std::vector<Case> cases = {
      {1, 16, BoundaryMode::kFree, KernelSpec::gaussian(1, 0.7)},
      {1, 16, BoundaryMode::kPeriodic, truncate(KernelSpec::fractional(1, 0.5), 0.05)},
      {2, 8, BoundaryMode::kFree, KernelSpec::fractional(2, 0.4)},
      {2, 16, BoundaryMode::kFree, KernelSpec::gaussian(2, 0.5)},
      {2, 16, BoundaryMode::kPeriodic, truncate(KernelSpec::fractional(2, 0.3), 0.1)},
      {3, 4, BoundaryMode::kPeriodic, KernelSpec::gaussian(3, 0.6)},
      {3, 8, BoundaryMode::kFree, KernelSpec::gaussian(3, 0.5)},
      {3, 8, BoundaryMode::kPeriodic, KernelSpec::ball_indicator(3, 1.0, 0.6)},
  };
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto t0 = Clock::now();
  double worst = 0.0;
  int fields = 0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const Case& k = cases[c];
    const GridSpec g = make_grid(k.dim, k.n, 1.0, k.mode);
    const KernelTable t = tabulate(k.spec, g);
    for (int trial = 0; trial < 25; ++trial, ++fields) {
      Field f(g);
      if (trial % 2 == 0) {
        for (double& v : f.values()) v = unit(rng);
      } else {
        f = random_indicator(g, rng);
      }
      const Field fast = convolve(f, t);
      const Field ref = oracle::convolve(f, t);
      double scale = 0.0;
      double diff = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        scale = std::max(scale, std::abs(ref[i]));
        diff = std::max(diff, std::abs(fast[i] - ref[i]));
      }
      worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
    }
  }
  const double elapsed = seconds_since(t0);
  out.detail << " fields " << fields << ", worst rel " << worst << ", " << elapsed << " s";
  out.require(fields == 200, "200 fields");
  out.require(worst <= 1e-10, "relative error <= 1e-10");
  out.require(elapsed < 60.0, "runtime < 1 min");
}

// 2. Per of [0, 1] for |x|^(-3/2) is 2 / (s (1 - s)) = 8.
void interval_perimeter(Outcome& out) {
  const double s = 0.5;
  const double exact = 2.0 / (s * (1.0 - s));
  double err[2];
  for (int k = 0; k < 2; ++k) {
    const GridSpec g = make_grid(1, 256 << k, 8.0);
    Field e(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.center(i)[0];
      e[i] = (x > 0.0 && x < 1.0) ? 1.0 : 0.0;
    }
    const double per = perimeter_set(e, tabulate(KernelSpec::fractional(1, s), g));
    err[k] = std::abs(per - exact) / exact;
    out.detail << " n=" << (256 << k) << ": " << per;
  }
  out.require(err[0] <= 0.02, "within 2% at n = 256");
  out.require(err[1] < err[0], "error decreases at n = 512");
}

// 3. Complement symmetry and submodularity on the torus.
void structural_identities(Outcome& out) {
  const GridSpec g = make_grid(2, 32, 2.0, BoundaryMode::kPeriodic);
  const KernelTable t = tabulate(KernelSpec::gaussian(2, 0.5), g);
  std::mt19937_64 rng(31);
  double worst_sym = 0.0;
  double min_deficit = 0.0;
  double worst_cross = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Field e = random_indicator(g, rng);
    const Field f = random_indicator(g, rng);
    const double pe = perimeter_set(e, t);
    const double pf = perimeter_set(f, t);
    worst_sym = std::max(worst_sym, std::abs(pe - perimeter_set(complement(e), t)) / std::max(pe, 1e-300));

    const Field cap = combine(e, f, [](double a, double b) { return std::min(a, b); });
    const Field cup = combine(e, f, [](double a, double b) { return std::max(a, b); });
    const double deficit = pe + pf - perimeter_set(cap, t) - perimeter_set(cup, t);
    const Field e_minus_f = combine(e, f, [](double a, double b) { return a * (1.0 - b); });
    const Field f_minus_e = combine(f, e, [](double a, double b) { return a * (1.0 - b); });
    const double cross = 2.0 * oracle::quadratic_form(e_minus_f, f_minus_e, t);
    const double scale = std::max({pe, pf, 1.0});
    min_deficit = std::min(min_deficit, deficit / scale);
    worst_cross = std::max(worst_cross, std::abs(deficit - cross) / scale);
    const SubmodularityReport rep = submodularity_deficit(e, f, t);
    worst_cross = std::max(worst_cross, std::abs(rep.deficit - cross) / scale);
    worst_cross = std::max(worst_cross, std::abs(rep.cross_term - cross) / scale);
  }
  out.detail << " complement " << worst_sym << ", min deficit " << min_deficit << ", cross-term "
             << worst_cross;
  out.require(worst_sym <= 1e-12, "complement symmetry 1e-12");
  out.require(min_deficit >= -1e-10, "deficit >= -1e-10");
  out.require(worst_cross <= 1e-10, "deficit equals cross-term to 1e-10");
}

// 4. Layer-cake formula for J_K.
void coarea(Outcome& out) {
  const GridSpec g = make_grid(2, 64, 4.0);
  const KernelTable t = tabulate(KernelSpec::gaussian(2, 1.0), g);
  std::mt19937_64 rng(41);
  double worst_smooth = 0.0;
  double worst_pc = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Field u = random_smooth_field(g, rng, trial % 2 == 1);
    const double direct = j_direct(u, t);
    const double layered = j_coarea(u, t, 256);
    worst_smooth = std::max(worst_smooth, std::abs(direct - layered) / direct);
  }
  for (int trial = 0; trial < 50; ++trial) {
    const Field u = random_piecewise_constant(g, rng, 1 + trial % 5);
    const double direct = j_direct(u, t);
    const double layered = j_coarea(u, t, 256);
    worst_pc = std::max(worst_pc, std::abs(direct - layered) / direct);
  }
  out.detail << " smooth " << worst_smooth << ", piecewise-constant " << worst_pc;
  out.require(worst_smooth <= 1e-3, "smooth fields within 1e-3");
  out.require(worst_pc <= 1e-10, "piecewise-constant fields within 1e-10");
}

// 5. Per_K(E) >= Per_K*(B_|E|) - tol_iso and the Riesz inequality.
void isoperimetric(Outcome& out) {
  AnisotropicNorm norm;
  norm.matrix = {1.0, 0.3, 0.3, 2.0};
  const struct {
    const char* name;
    KernelSpec spec;
    GridSpec grid;
  } kernels[] = {
      {"gaussian", KernelSpec::gaussian(2, 1.0), make_grid(2, 32, 4.0)},
      {"anisotropic", truncate(KernelSpec::anisotropic_fractional(2, 0.5, norm), 0.05),
       make_grid(2, 32, 2.0)},
  };
  for (const auto& k : kernels) {
    const KernelTable t = tabulate(k.spec, k.grid);
    const KernelTable star = rearrange_kernel(t);
    std::mt19937_64 rng(51);
    int iso_bad = 0;
    int riesz_bad = 0;
    double worst = -1e300;
    for (int trial = 0; trial < 500; ++trial) {
      const Field e = random_indicator(k.grid, rng);
      const IsoperimetricReport iso = isoperimetric_check(e, t, star);
      const RieszReport rz = riesz_check(e, t, star);
      // Independent bound: Per_K*(B) of the centered ball with E's cell count.
      const double bound = perimeter_set(rearrange_set(e), star);
      const double per = perimeter_set(e, t);
      if (per < bound - iso.tolerance || iso.violated) ++iso_bad;
      if (!(rz.lhs <= rz.rhs + rz.tolerance) || !rz.ok) ++riesz_bad;
      worst = std::max(worst, (bound - per) / iso.tolerance);
    }
    out.detail << ' ' << k.name << ": iso violations " << iso_bad << ", riesz violations "
               << riesz_bad << ", worst (bound - per)/tol " << worst << ';';
    out.require(iso_bad == 0, std::string(k.name) + " isoperimetric inequality");
    out.require(riesz_bad == 0, std::string(k.name) + " Riesz inequality");
  }
}

// 6. g(m) ~ ||K||_1 m for small m, g <= ||K||_1 m, and growth along K_eps.
void profile_asymptotics(Outcome& out) {
  const GridSpec g = make_grid(2, 64, 4.0);
  const KernelTable t = tabulate(KernelSpec::gaussian(2, 1.0), g);
  const ProfileTable p = isoperimetric_profile(t, geometric_masses(g, 16, 8.0));
  const double l1 = t.l1_norm();
  const double slope = p.g_values.front() / p.masses.front();
  out.detail << " g/m at m=" << p.masses.front() << ": " << slope << " vs " << l1 << ';';
  out.require(std::abs(slope - l1) <= 0.1 * l1, "smallest-mass slope within 10% of ||K||_1");
  bool below = true;
  for (std::size_t i = 0; i < p.masses.size(); ++i) below &= p.g_values[i] <= l1 * p.masses[i];
  out.require(below, "g(m) <= ||K||_1 m on every row");

  const GridSpec gf = make_grid(2, 32, 2.0);
  const double m = 4 * gf.cell_volume();
  double prev = 0.0;
  bool increasing = true;
  for (double eps : {0.1, 0.03, 0.01, 0.003, 0.001}) {
    const KernelTable te = tabulate(truncate(KernelSpec::fractional(2, 0.5), eps), gf);
    const std::vector<double> ms{m};
    const ProfileTable pe = isoperimetric_profile(te, ms);
    const double ratio = pe.g_values.front() / pe.masses.front();
    out.detail << " eps=" << eps << ": " << ratio;
    increasing &= ratio > prev;
    prev = ratio;
  }
  out.require(increasing, "g(m)/m increases as eps decreases");
}

// 7. Relaxed problem for the gaussian at m = pi recovers the disk.
void solver(Outcome& out) {
  const auto t0 = Clock::now();
  const GridSpec g = make_grid(2, 64, 4.0);
  const KernelTable t = tabulate(KernelSpec::gaussian(2, 1.0), g);
  const double m = std::numbers::pi;
  SolverConfig cfg;
  cfg.target_mass = m;
  cfg.restarts = 8;
  cfg.seed = 7;
  cfg.certificate.tol_v = 1e-4 * t.l1_norm();
  const SolverResult r = minimize(cfg, t);

  const Field ball = ball_density(g, m, barycenter(r.f));
  double diff = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) diff += std::abs(r.f[i] - ball[i]);
  diff *= g.cell_volume();
  const double ball_energy = relaxed_energy(ball_density(g, m), t);
  bool monotone = !r.history.empty();
  for (std::size_t i = 1; i < r.history.size(); ++i) monotone &= r.history[i] <= r.history[i - 1];
  const Certificate cert = first_variation_certificate(r.f, t, cfg.certificate);
  const double elapsed = seconds_since(t0);

  out.detail << " symdiff " << diff << ", energy " << r.energy << " vs ball " << ball_energy
             << ", certificate viol S/N/I " << cert.viol_s << '/' << cert.viol_n << '/'
             << cert.viol_i << " (tol_V " << cert.tol_v << "), " << elapsed << " s";
  out.require(diff <= 0.05 * m, "symmetric difference <= 0.05 m");
  out.require(r.energy <= ball_energy + 1e-6, "energy <= ball + 1e-6");
  out.require(monotone, "monotone energy history");
  out.require(cert.passed && r.certificate.passed, "first-variation certificate");
  out.require(elapsed < 300.0, "runtime < 5 min");
}

// 8. Positive-definite kernels give indicator minimizers.
void indicator_collapse(Outcome& out) {
  const GridSpec g = make_grid(2, 64, 4.0);
  const KernelTable t = tabulate(KernelSpec::gaussian(2, 1.0), g);
  const double m = 200 * g.cell_volume();
  SolverConfig cfg;
  cfg.target_mass = m;
  cfg.restarts = 4;
  cfg.seed = 8;
  const SolverResult r = minimize(cfg, t);
  double frac = 0.0;
  for (double v : r.f.values())
    if (v > 1e-6 && v < 1.0 - 1e-6) frac += v;
  frac *= g.cell_volume();

  const GridSpec gp = make_grid(2, 32, 4.0, BoundaryMode::kPeriodic);
  const bool gaussian_pd = check_positive_definite(tabulate(KernelSpec::gaussian(2, 1.0), gp)).is_pd;
  Field annulus(gp);
  for (std::size_t i = 0; i < gp.size(); ++i) {
    const double rr = norm(gp.center(i), 2);
    annulus[i] = (rr >= 1.0 && rr <= 2.0) ? 1.0 : 0.0;
  }
  const PositiveDefiniteReport ann =
      check_positive_definite(tabulate(KernelSpec::tabulated(annulus), gp));

  out.detail << " fractional mass " << frac << " (m " << m << "), gaussian pd " << gaussian_pd
             << ", annulus min coefficient " << ann.min_fourier_coefficient;
  out.require(r.converged, "solver converged");
  out.require(frac <= 1e-3 * m, "fractional mass <= 1e-3 m");
  out.require(gaussian_pd, "gaussian is positive definite");
  out.require(!ann.is_pd, "annulus indicator is not positive definite");
}

// 9. Capped-simplex projection vs enumeration of active sets.
void projection(Outcome& out) {
  std::mt19937_64 rng(91);
  std::uniform_int_distribution<int> length(4, 6);
  std::uniform_real_distribution<double> value(-2.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = length(rng);
    const double h = trial % 2 == 0 ? 1.0 : 0.25;
    const GridSpec g = make_grid(1, n, 0.5 * n * h);
    Field v(g);
    for (double& x : v.values()) x = value(rng);
    const double m = std::max(unit(rng), 1e-3) * n * h;
    const Field p = project_capped_simplex(v, m);
    const std::vector<double> ref =
        oracle::capped_simplex_qp(std::vector<double>(v.values().begin(), v.values().end()), h, m);
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(p[i] - ref[i]));
  }
  out.detail << " worst " << worst;
  out.require(worst <= 1e-10, "matches brute-force QP to 1e-10");
}

// 10. Poincare inequality with the profile-fitted constant; median = 0.
void poincare(Outcome& out) {
  const GridSpec g = make_grid(2, 32, 2.0);
  const KernelTable t = tabulate(KernelSpec::gaussian(2, 1.0), g);
  const ProfileTable p = isoperimetric_profile(t, geometric_masses(g, 24, 0.75 * g.box_volume()));
  const double c = fit_poincare_constant(p, 1.0);
  std::mt19937_64 rng(101);
  int bad = 0;
  int nonzero_median = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const Field u = random_compact_field(g, rng);
    const PoincareReport r = poincare_check(u, t, 1.0, c, 256);
    if (!r.ok) ++bad;
    if (r.rhs > 0.0) worst = std::max(worst, r.lhs / r.rhs);
    if (median(u) != 0.0) ++nonzero_median;
    if (median(random_smooth_field(g, rng)) != 0.0) ++nonzero_median;
  }
  out.detail << " C " << c << ", failures " << bad << ", worst lhs/rhs " << worst
             << ", nonzero medians " << nonzero_median;
  out.require(bad == 0, "poincare_check passes on every field");
  out.require(nonzero_median == 0, "median is 0 on free-mode fields");
}

// 11. Maximal quadratic form along a mass ladder.
void subadditivity(Outcome& out) {
  const GridSpec g = make_grid(2, 64, 4.0);
  const KernelTable t = tabulate(KernelSpec::gaussian(2, 1.0), g);
  const double m0 = ladder_base_mass(g, 5);
  const LadderReport r = subadditivity_ladder(t, m0, 5, SolverConfig{});
  bool monotone = r.masses.size() == 5;
  for (std::size_t i = 1; i < r.quads.size(); ++i) monotone &= r.quads[i] >= r.quads[i - 1];
  bool super = !r.pairs.empty();
  double min_gap = 1e300;
  for (const auto& pr : r.pairs) {
    super &= pr.quad_sum >= pr.quad_m1 + pr.quad_m2 - pr.eps_tail;
    min_gap = std::min(min_gap, pr.gap);
  }
  out.detail << " m0 " << m0 << ", pairs " << r.pairs.size() << ", min gap " << min_gap
             << ", eps_tail " << r.eps_tail;
  out.require(monotone && r.monotone, "monotone along the ladder");
  out.require(super && r.superadditive, "eps-tail superadditivity");
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  criterion(1, "FFT convolution equals the direct double sum", oracle_equivalence);
  criterion(2, "1D fractional interval perimeter", interval_perimeter);
  criterion(3, "complement symmetry and submodularity", structural_identities);
  criterion(4, "coarea formula", coarea);
  criterion(5, "isoperimetric and Riesz inequalities", isoperimetric);
  criterion(6, "profile asymptotics", profile_asymptotics);
  criterion(7, "solver recovers the ball", solver);
  criterion(8, "indicator collapse for positive-definite kernels", indicator_collapse);
  criterion(9, "capped-simplex projection", projection);
  criterion(10, "Poincare inequality and median", poincare);
  criterion(11, "subadditivity ladder", subadditivity);
  const double total = seconds_since(t0);
  std::printf("total %.1f s, %d failed\n", total, failures);
  return failures == 0 ? 0 : 1;
}
