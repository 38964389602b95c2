#include "nlperim/solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "nlperim/convolution.hpp"
#include "nlperim/error.hpp"
#include "nlperim/perimeter.hpp"
#include "nlperim/rearrange.hpp"

namespace nlperim {

namespace {

void require_feasible_mass(const GridSpec& grid, double m, const char* what) {
  if (!(m >= 0.0) || m > grid.box_volume() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << what << ": mass " << m << " is infeasible for a box of volume " << grid.box_volume();
    throw ConstraintError(os.str());
  }
}

double dot(const Field& a, const Field& b) {
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * b[i];
  return a.grid().cell_volume() * stable_sum(prod);
}

double clipped_sum(std::span<const double> g, double tau) {
  double s = 0.0;
  for (double x : g) s += std::clamp(x - tau, 0.0, 1.0);
  return s;
}

// Fills cells in the given order: whole cells, then one fractional cell.
Field fill_in_order(const GridSpec& grid, const std::vector<std::size_t>& order, double m) {
  Field s(grid);
  double units = m / grid.cell_volume();
  const double whole_d = std::floor(units + 1e-12 * std::max(1.0, units));
  const auto whole = std::min(static_cast<std::size_t>(std::max(whole_d, 0.0)), grid.size());
  for (std::size_t k = 0; k < whole; ++k) s[order[k]] = 1.0;
  const double rest = units - static_cast<double>(whole);
  if (whole < grid.size() && rest > 0.0) s[order[whole]] = std::min(rest, 1.0);
  return s;
}

}  // namespace

const char* to_string(AscentMethod m) {
  return m == AscentMethod::kFrankWolfe ? "fw" : "pg";
}

const char* to_string(InitKind k) {
  switch (k) {
    case InitKind::kBall:
      return "ball";
    case InitKind::kRandom:
      return "random";
    case InitKind::kFile:
      return "file";
  }
  return "unknown";
}

void SolverConfig::validate(const GridSpec& grid) const {
  if (!(target_mass > 0.0)) throw ConstraintError("target mass must be positive");
  require_feasible_mass(grid, target_mass, "solver");
  if (restarts < 1) throw ConstraintError("restarts must be at least 1");
  if (max_iters < 1) throw ConstraintError("max_iters must be at least 1");
  if (!(stop_tol > 0.0)) throw ConstraintError("stop_tol must be positive");
  if (init == InitKind::kFile) {
    if (!initial) throw ConstraintError("init = file but no initial field was supplied");
    require_same_grid(initial->grid(), grid, "solver initial field");
  }
}

Field project_capped_simplex(const Field& g, double m) {
  const GridSpec& grid = g.grid();
  require_feasible_mass(grid, m, "project_capped_simplex");
  const double target = m / grid.cell_volume();
  const auto vals = g.values();
  const std::size_t n = vals.size();
  Field out(grid);
  if (target >= static_cast<double>(n)) {
    for (double& x : out.values()) x = 1.0;
    return out;
  }

  // S(tau) = sum clip(g - tau, 0, 1) is nonincreasing and piecewise linear
  // with kinks at g_i and g_i - 1.
  std::vector<double> bp;
  bp.reserve(2 * n);
  for (double x : vals) {
    bp.push_back(x);
    bp.push_back(x - 1.0);
  }
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());

  // Largest breakpoint index with S(bp) >= target.
  std::size_t lo = 0;
  std::size_t hi = bp.size() - 1;
  double tau = 0.0;
  if (clipped_sum(vals, bp[hi]) >= target) {
    tau = bp[hi];  // only possible for target == 0
  } else {
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (clipped_sum(vals, bp[mid]) >= target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double s_lo = clipped_sum(vals, bp[lo]);
    const double s_hi = clipped_sum(vals, bp[hi]);
    if (s_lo > s_hi) {
      tau = bp[lo] + (s_lo - target) * (bp[hi] - bp[lo]) / (s_lo - s_hi);
    } else {
      tau = bp[lo];
    }
    // Bisection fallback when round-off leaves the mass off target.
    if (std::abs(clipped_sum(vals, tau) - target) > 1e-14 * std::max(1.0, target)) {
      double a = bp[lo];
      double b = bp[hi];
      for (int it = 0; it < 200; ++it) {
        tau = 0.5 * (a + b);
        const double s = clipped_sum(vals, tau);
        if (std::abs(s - target) <= 1e-14 * std::max(1.0, target)) break;
        (s > target ? a : b) = tau;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = std::clamp(vals[i] - tau, 0.0, 1.0);
  return out;
}

Field bathtub_argmax(const Field& v, double m) {
  const GridSpec& grid = v.grid();
  require_feasible_mass(grid, m, "bathtub_argmax");
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return fill_in_order(grid, order, m);
}

Field ball_density(const GridSpec& grid, double m, const Point3& center) {
  require_feasible_mass(grid, m, "ball_density");
  Field negdist(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point3 x = grid.center(i);
    double s = 0.0;
    for (int d = 0; d < grid.dimension; ++d) s += (x[d] - center[d]) * (x[d] - center[d]);
    negdist[i] = -s;
  }
  return bathtub_argmax(negdist, m);
}

Field ascent_step_pg(const Field& f, const KernelTable& kernel, double m) {
  require_same_grid(f.grid(), kernel.grid(), "ascent_step_pg");
  const double l1 = kernel.l1_norm();
  if (!(l1 > 0.0) || !std::isfinite(l1)) return f;
  const Field v = convolve(f, kernel);
  const double q0 = dot(f, v);
  double eta = 1.0 / (2.0 * l1);
  Field trial(f.grid());
  for (int halving = 0; halving < 60; ++halving, eta *= 0.5) {
    for (std::size_t i = 0; i < f.size(); ++i) trial[i] = f[i] + eta * 2.0 * v[i];
    Field next = project_capped_simplex(trial, m);
    if (quadratic_form(next, next, kernel) >= q0) return next;
  }
  return f;
}

Field ascent_step_fw(const Field& f, const KernelTable& kernel, double m) {
  require_same_grid(f.grid(), kernel.grid(), "ascent_step_fw");
  const Field v = convolve(f, kernel);
  const Field s = bathtub_argmax(v, m);
  Field d(f.grid());
  bool moves = false;
  for (std::size_t i = 0; i < f.size(); ++i) {
    d[i] = s[i] - f[i];
    moves = moves || d[i] != 0.0;
  }
  if (!moves) return f;
  const double a = quadratic_form(d, d, kernel);
  const double b = 2.0 * dot(v, d);
  double t = 0.0;
  if (a < 0.0) {
    t = std::clamp(-b / (2.0 * a), 0.0, 1.0);
  } else {
    t = a + b > 0.0 ? 1.0 : 0.0;
  }
  if (t == 0.0) return f;
  if (t == 1.0) return s;
  Field next(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) next[i] = std::clamp(f[i] + t * d[i], 0.0, 1.0);
  return next;
}

namespace {

struct RunOutcome {
  Field f;
  double energy = 0.0;
  double quad = 0.0;
  std::vector<double> history;
  int iterations = 0;
  bool stagnated = false;
};

Field initial_density(const SolverConfig& config, const GridSpec& grid, int index) {
  if (index == 0 && config.init == InitKind::kBall) return ball_density(grid, config.target_mass);
  if (index == 0 && config.init == InitKind::kFile)
    return project_capped_simplex(*config.initial, config.target_mass);
  std::mt19937_64 rng(config.seed + static_cast<std::uint64_t>(index));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Field noise(grid);
  for (double& x : noise.values()) x = uni(rng);
  return project_capped_simplex(noise, config.target_mass);
}

RunOutcome run_one(const SolverConfig& config, const KernelTable& kernel, int index) {
  const GridSpec& grid = kernel.grid();
  const double m = config.target_mass;
  const double base = m * kernel.mass_factor();
  const double scale = std::max(std::abs(base), std::numeric_limits<double>::min());

  RunOutcome out;
  out.f = initial_density(config, grid, index);
  out.quad = quadratic_form(out.f, out.f, kernel);
  out.energy = base - out.quad;
  out.history.push_back(out.energy);
  for (int it = 0; it < config.max_iters; ++it) {
    Field next = config.method == AscentMethod::kFrankWolfe ? ascent_step_fw(out.f, kernel, m)
                                                            : ascent_step_pg(out.f, kernel, m);
    const double q = quadratic_form(next, next, kernel);
    out.iterations = it + 1;
    if (!(q >= out.quad)) {
      // No ascent left within round-off.
      out.stagnated = true;
      break;
    }
    const double energy = base - q;
    const double change = std::abs(out.energy - energy) / scale;
    out.f = std::move(next);
    out.quad = q;
    out.energy = energy;
    out.history.push_back(energy);
    if (change < config.stop_tol) {
      out.stagnated = true;
      break;
    }
  }
  return out;
}

}  // namespace

SolverResult minimize(const SolverConfig& config, const KernelTable& kernel) {
  const GridSpec& grid = kernel.grid();
  config.validate(grid);
  if (!kernel.integrable())
    throw DomainError("minimize requires an integrable kernel (K in L^1); truncate first");
  if (!(kernel.table_sum() > 0.0)) throw DomainError("minimize requires a kernel that is not 0");

  std::vector<std::future<RunOutcome>> jobs;
  jobs.reserve(static_cast<std::size_t>(config.restarts));
  for (int i = 0; i < config.restarts; ++i)
    jobs.push_back(std::async(std::launch::async, run_one, std::cref(config), std::cref(kernel), i));

  SolverResult result;
  int best = -1;
  RunOutcome best_run;
  for (int i = 0; i < config.restarts; ++i) {
    RunOutcome run = jobs[static_cast<std::size_t>(i)].get();
    result.runs.push_back({i, run.energy, run.iterations, run.stagnated});
    if (best < 0 || run.energy < best_run.energy) {
      best = i;
      best_run = std::move(run);
    }
  }
  result.f = std::move(best_run.f);
  result.energy = best_run.energy;
  result.quad = best_run.quad;
  result.history = std::move(best_run.history);
  result.iterations = best_run.iterations;
  result.best_of = best;
  CertificateOptions cert = config.certificate;
  cert.seed = config.seed;
  result.certificate = first_variation_certificate(result.f, kernel, cert);
  result.converged = best_run.stagnated && result.certificate.passed;
  return result;
}

double kernel_mass_beyond(const KernelTable& kernel, double d) {
  const GridSpec& grid = kernel.grid();
  std::vector<double> far;
  for (std::size_t i = 0; i < kernel.values().size(); ++i) {
    const Index3 z = kernel.offset_of(i);
    if (!kernel.stores(z)) continue;
    double r2 = 0.0;
    for (int k = 0; k < grid.dimension; ++k) r2 += static_cast<double>(z[k]) * z[k];
    if (std::sqrt(r2) * grid.spacing >= d) far.push_back(kernel.values()[i]);
  }
  const double tail = grid.mode == BoundaryMode::kFree ? kernel.tail_moment() : 0.0;
  return grid.cell_volume() * stable_sum(far) + tail;
}

SubadditivityReport subadditivity_probe(const KernelTable& kernel, double m1, double m2,
                                        const SolverConfig& base) {
  const GridSpec& grid = kernel.grid();
  if (!(m1 > 0.0) || !(m2 > 0.0)) throw ConstraintError("subadditivity_probe needs m1, m2 > 0");
  const int dim = grid.dimension;
  const double r1 = std::pow(m1 / unit_ball_volume(dim), 1.0 / dim);
  const double r2 = std::pow(m2 / unit_ball_volume(dim), 1.0 / dim);
  const double side = grid.side_length();
  if (r1 + r2 > 0.25 * side) {
    std::ostringstream os;
    os << "subadditivity_probe: balls of radii " << r1 << " and " << r2
       << " cannot be separated by half of the box side " << side;
    throw ConstraintError(os.str());
  }
  auto solve = [&](double m) {
    SolverConfig c = base;
    c.target_mass = m;
    return minimize(c, kernel).quad;
  };
  SubadditivityReport out;
  out.m1 = m1;
  out.m2 = m2;
  out.quad_m1 = solve(m1);
  out.quad_m2 = m1 == m2 ? out.quad_m1 : solve(m2);
  out.quad_sum = solve(m1 + m2);
  out.eps_tail = (m1 + m2) * kernel_mass_beyond(kernel, 0.5 * side);
  out.gap = out.quad_sum - out.quad_m1 - out.quad_m2;
  const double round = 1e-12 * std::max(1.0, out.quad_sum);
  out.monotone = out.quad_sum + round >= std::max(out.quad_m1, out.quad_m2);
  out.superadditive = out.gap >= -out.eps_tail - round;
  return out;
}

double ladder_base_mass(const GridSpec& grid, int points) {
  if (points < 2) throw ConstraintError("a subadditivity ladder needs at least 2 points");
  const int dim = grid.dimension;
  double widest = 0.0;
  for (int i = 1; 2 * i <= points; ++i) {
    const int j = points - i;
    widest = std::max(widest, std::pow(i, 1.0 / dim) + std::pow(j, 1.0 / dim));
  }
  const double r0 = 0.25 * grid.side_length() / widest;
  return unit_ball_volume(dim) * std::pow(r0, dim) * (1.0 - 1e-9);
}

LadderReport subadditivity_ladder(const KernelTable& kernel, double m0, int points,
                                  const SolverConfig& base) {
  const GridSpec& grid = kernel.grid();
  if (points < 2) throw ConstraintError("a subadditivity ladder needs at least 2 points");
  if (!(m0 > 0.0)) throw ConstraintError("ladder base mass must be positive");
  const int dim = grid.dimension;
  const double r0 = std::pow(m0 / unit_ball_volume(dim), 1.0 / dim);
  const double side = grid.side_length();

  LadderReport out;
  out.eps_tail = kernel_mass_beyond(kernel, 0.5 * side);
  for (int k = 1; k <= points; ++k) {
    SolverConfig c = base;
    c.target_mass = k * m0;
    out.masses.push_back(c.target_mass);
    out.quads.push_back(minimize(c, kernel).quad);
  }
  out.monotone = true;
  for (int k = 1; k < points; ++k) {
    const double round = 1e-12 * std::max(1.0, out.quads[k]);
    if (out.quads[k] + round < out.quads[k - 1]) out.monotone = false;
  }
  out.superadditive = true;
  for (int i = 1; i <= points; ++i) {
    for (int j = i; i + j <= points; ++j) {
      if (r0 * (std::pow(i, 1.0 / dim) + std::pow(j, 1.0 / dim)) > 0.25 * side * (1.0 + 1e-9)) {
        std::ostringstream os;
        os << "subadditivity_ladder: masses " << i * m0 << " and " << j * m0
           << " do not fit side by side; lower m0";
        throw ConstraintError(os.str());
      }
      SubadditivityReport r;
      r.m1 = out.masses[i - 1];
      r.m2 = out.masses[j - 1];
      r.quad_m1 = out.quads[i - 1];
      r.quad_m2 = out.quads[j - 1];
      r.quad_sum = out.quads[i + j - 1];
      r.eps_tail = (r.m1 + r.m2) * out.eps_tail;
      r.gap = r.quad_sum - r.quad_m1 - r.quad_m2;
      const double round = 1e-12 * std::max(1.0, r.quad_sum);
      r.monotone = r.quad_sum + round >= std::max(r.quad_m1, r.quad_m2);
      r.superadditive = r.gap >= -r.eps_tail - round;
      out.superadditive = out.superadditive && r.superadditive;
      out.monotone = out.monotone && r.monotone;
      out.pairs.push_back(r);
    }
  }
  return out;
}

}  // namespace nlperim
