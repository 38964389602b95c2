#include "nlperim/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace nlperim {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Point3 random_point(const GridSpec& grid, std::mt19937_64& rng, double reach) {
  Point3 p{0, 0, 0};
  for (int d = 0; d < grid.dimension; ++d) p[d] = uniform(rng, -reach, reach);
  return p;
}

double dist2(const Point3& a, const Point3& b, int dim) {
  double s = 0.0;
  for (int d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

// Guarantees at least one cell so masses stay positive.
void ensure_nonempty(Field& f) {
  if (f.max() > 0.0) return;
  const GridSpec& g = f.grid();
  Index3 mid{0, 0, 0};
  for (int d = 0; d < g.dimension; ++d) mid[d] = g.cells_per_side / 2;
  f[g.ravel(mid)] = 1.0;
}

}  // namespace

Field random_bernoulli_set(const GridSpec& grid, std::mt19937_64& rng, double p) {
  Field f(grid);
  const double reach = 0.75 * grid.half_width();
  std::bernoulli_distribution coin(p);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point3 x = grid.center(i);
    bool inside = true;
    for (int d = 0; d < grid.dimension; ++d) inside = inside && std::abs(x[d]) < reach;
    if (inside && coin(rng)) f[i] = 1.0;
  }
  ensure_nonempty(f);
  return f;
}

Field random_ball_union(const GridSpec& grid, std::mt19937_64& rng, int balls) {
  Field f(grid);
  const double w = grid.half_width();
  for (int b = 0; b < balls; ++b) {
    const double r = uniform(rng, 0.08 * w, 0.3 * w);
    const Point3 c = random_point(grid, rng, 0.75 * w - r);
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (dist2(grid.center(i), c, grid.dimension) <= r * r) f[i] = 1.0;
  }
  ensure_nonempty(f);
  return f;
}

Field random_translated_ball(const GridSpec& grid, std::mt19937_64& rng) {
  return random_ball_union(grid, rng, 1);
}

Field random_ellipse(const GridSpec& grid, std::mt19937_64& rng) {
  Field f(grid);
  const double w = grid.half_width();
  Point3 axes{1, 1, 1};
  for (int d = 0; d < grid.dimension; ++d) axes[d] = uniform(rng, 0.1 * w, 0.35 * w);
  const Point3 c = random_point(grid, rng, 0.75 * w - std::max({axes[0], axes[1], axes[2]}));
  const double angle = uniform(rng, 0.0, 3.141592653589793);
  const double ca = std::cos(angle);
  const double sa = std::sin(angle);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Point3 x = grid.center(i);
    for (int d = 0; d < grid.dimension; ++d) x[d] -= c[d];
    if (grid.dimension >= 2) {
      const double u = ca * x[0] + sa * x[1];
      const double v = -sa * x[0] + ca * x[1];
      x[0] = u;
      x[1] = v;
    }
    double q = 0.0;
    for (int d = 0; d < grid.dimension; ++d) q += x[d] * x[d] / (axes[d] * axes[d]);
    if (q <= 1.0) f[i] = 1.0;
  }
  ensure_nonempty(f);
  return f;
}

Field random_indicator(const GridSpec& grid, std::mt19937_64& rng) {
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0:
      return random_bernoulli_set(grid, rng, uniform(rng, 0.2, 0.8));
    case 1:
      return random_ball_union(grid, rng, 3);
    case 2:
      return random_translated_ball(grid, rng);
    default:
      return random_ellipse(grid, rng);
  }
}

Field random_smooth_field(const GridSpec& grid, std::mt19937_64& rng, bool nonnegative) {
  const double w = grid.half_width();
  const double radius = uniform(rng, 0.5 * w, 0.7 * w);
  const Point3 c = random_point(grid, rng, 0.75 * w - radius);
  struct Wave {
    double amp;
    Point3 k;
    double phase;
  };
  const double offset = uniform(rng, -1.0, 1.0);
  std::vector<Wave> waves(3);
  for (auto& wave : waves) {
    wave.amp = uniform(rng, -1.0, 1.0);
    wave.k = random_point(grid, rng, 3.0 / radius);
    wave.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  }
  Field f(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point3 x = grid.center(i);
    const double t = 1.0 - dist2(x, c, grid.dimension) / (radius * radius);
    if (t <= 0.0) continue;
    double s = offset;
    for (const auto& wave : waves) {
      double arg = wave.phase;
      for (int d = 0; d < grid.dimension; ++d) arg += wave.k[d] * x[d];
      s += wave.amp * std::cos(arg);
    }
    f[i] = t * t * t * (nonnegative ? s * s : s);
  }
  return f;
}

Field random_piecewise_constant(const GridSpec& grid, std::mt19937_64& rng, int levels) {
  Field f(grid);
  const double w = grid.half_width();
  const Point3 c = random_point(grid, rng, 0.2 * w);
  for (int k = 0; k < levels; ++k) {
    const double r = 0.55 * w * (levels - k) / levels;
    const double value = uniform(rng, -1.0, 1.0) + (k + 1);
    for (std::size_t i = 0; i < grid.size(); ++i)
      if (dist2(grid.center(i), c, grid.dimension) <= r * r) f[i] = value;
  }
  return f;
}

Field random_compact_field(const GridSpec& grid, std::mt19937_64& rng) {
  Field f = random_smooth_field(grid, rng, std::bernoulli_distribution(0.5)(rng));
  const double w = grid.half_width();
  const double r = uniform(rng, 0.2 * w, 0.7 * w);
  const Point3 c = random_point(grid, rng, 0.75 * w - r);
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (dist2(grid.center(i), c, grid.dimension) > r * r) f[i] = 0.0;
  return f;
}

}  // namespace nlperim
