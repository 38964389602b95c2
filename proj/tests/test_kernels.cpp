#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nlperim/error.hpp"
#include "nlperim/kernels.hpp"
#include "oracles.hpp"

using namespace nlperim;

namespace {

std::vector<KernelSpec> sample_specs(int dim) {
  std::vector<KernelSpec> out;
  out.push_back(KernelSpec::fractional(dim, 0.5));
  out.push_back(KernelSpec::gaussian(dim, 0.8));
  out.push_back(KernelSpec::ball_indicator(dim, 2.0, 0.6));
  out.push_back(truncate(KernelSpec::fractional(dim, 0.3), 0.1));
  out.push_back(KernelSpec::heterogeneous_fractional(dim, 0.4, 1.0, 2.0, Amplitude::kAngular));
  AnisotropicNorm b;
  b.p = 1.0;
  out.push_back(KernelSpec::anisotropic_fractional(dim, 0.6, b));
  return out;
}

Point3 random_point(std::mt19937_64& rng, int dim, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Point3 x{0, 0, 0};
  for (int d = 0; d < dim; ++d) x[d] = u(rng);
  return x;
}

// 1D cell-pair average of |t|^(-1-s) at offset z >= 1 (tent weight).
double fractional_pair_average_1d(double s, double h, int z) {
  auto prim0 = [&](double t) { return std::pow(t, -s) / -s; };
  auto prim1 = [&](double t) { return std::pow(t, 1.0 - s) / (1.0 - s); };
  const double a = (z - 1) * h;
  const double m = z * h;
  const double b = (z + 1) * h;
  double rising = prim1(m) - (a > 0.0 ? prim1(a) : 0.0);
  if (a > 0.0) rising -= a * (prim0(m) - prim0(a));
  const double falling = b * (prim0(b) - prim0(m)) - (prim1(b) - prim1(m));
  return (rising + falling) / (h * h);
}

Field annulus_samples(const GridSpec& g) {
  Field f(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = norm(g.center(i), g.dimension);
    f[i] = (r >= 1.0 && r <= 2.0) ? 1.0 : 0.0;
  }
  return f;
}

}  // namespace

TEST(EvalKernel, FractionalPowerLaw) {
  EXPECT_DOUBLE_EQ(eval_kernel(KernelSpec::fractional(1, 0.5), {4, 0, 0}), 0.125);
  EXPECT_NEAR(eval_kernel(KernelSpec::fractional(3, 0.25), {0, 2, 0}), std::pow(2.0, -3.25), 1e-15);
}

TEST(EvalKernel, GaussianAtOrigin) {
  EXPECT_EQ(eval_kernel(KernelSpec::gaussian(1, 1.0), {0, 0, 0}), 1.0);
  EXPECT_NEAR(eval_kernel(KernelSpec::gaussian(2, 2.0), {1, 1, 0}), std::exp(-0.5), 1e-15);
}

TEST(EvalKernel, BallIndicator) {
  const KernelSpec k = KernelSpec::ball_indicator(2, 3.0, 1.0);
  EXPECT_EQ(eval_kernel(k, {0.5, 0.5, 0}), 3.0);
  EXPECT_EQ(eval_kernel(k, {0.8, 0.8, 0}), 0.0);
}

TEST(EvalKernel, AnisotropicUsesUnitBallNorm) {
  AnisotropicNorm b;
  b.p = 1.0;
  const KernelSpec k = KernelSpec::anisotropic_fractional(2, 0.5, b);
  EXPECT_NEAR(eval_kernel(k, {1, 1, 0}), std::pow(2.0, -2.5), 1e-15);
}

TEST(EvalKernel, HeterogeneousStaysWithinBounds) {
  std::mt19937_64 rng(5);
  const KernelSpec k = KernelSpec::heterogeneous_fractional(2, 0.5, 1.0, 3.0, Amplitude::kPeriodic);
  const KernelSpec base = KernelSpec::fractional(2, 0.5);
  for (int t = 0; t < 200; ++t) {
    const Point3 x = random_point(rng, 2, 2.0);
    const double ratio = eval_kernel(k, x) / eval_kernel(base, x);
    EXPECT_GE(ratio, 1.0 - 1e-12);
    EXPECT_LE(ratio, 3.0 + 1e-12);
  }
}

TEST(EvalKernel, IsEven) {
  std::mt19937_64 rng(6);
  for (int dim = 1; dim <= 3; ++dim) {
    for (const KernelSpec& k : sample_specs(dim)) {
      for (int t = 0; t < 50; ++t) {
        const Point3 x = random_point(rng, dim, 2.0);
        const Point3 mx{-x[0], -x[1], -x[2]};
        EXPECT_EQ(eval_kernel(k, x), eval_kernel(k, mx)) << k.id();
      }
    }
  }
}

TEST(EvalKernel, SingularOriginIsDomainError) {
  EXPECT_THROW(eval_kernel(KernelSpec::fractional(2, 0.5), {0, 0, 0}), DomainError);
}

TEST(KernelSpec, RejectsBadParameters) {
  EXPECT_THROW(KernelSpec::fractional(2, 1.0).validate(), DomainError);
  EXPECT_THROW(KernelSpec::fractional(2, 0.0).validate(), DomainError);
  EXPECT_THROW(KernelSpec::gaussian(2, -1.0).validate(), DomainError);
  EXPECT_THROW(KernelSpec::heterogeneous_fractional(2, 0.5, 2.0, 1.0, Amplitude::kAngular).validate(),
               DomainError);
}

TEST(Truncate, CapActive) {
  const KernelSpec k = truncate(KernelSpec::fractional(1, 0.5), 1.0);
  EXPECT_EQ(eval_kernel(k, {0.1, 0, 0}), 1.0);
  EXPECT_EQ(eval_kernel(k, {0, 0, 0}), 1.0);
}

TEST(Truncate, CapInactiveBelowLevel) {
  const KernelSpec g = KernelSpec::gaussian(2, 1.0);
  const KernelSpec t = truncate(g, 0.5);
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Point3 x = random_point(rng, 2, 3.0);
    EXPECT_EQ(eval_kernel(t, x), eval_kernel(g, x));
  }
}

TEST(Truncate, MonotoneAndConvergent) {
  const KernelSpec k = KernelSpec::fractional(2, 0.7);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const Point3 x = random_point(rng, 2, 1.0);
    double prev = 0.0;
    for (double eps : {1.0, 0.3, 0.1, 0.01, 1e-4, 1e-8}) {
      const double v = eval_kernel(truncate(k, eps), x);
      EXPECT_GE(v, prev);
      EXPECT_LE(v, 1.0 / eps);
      prev = v;
    }
    EXPECT_EQ(prev, eval_kernel(k, x));
  }
}

TEST(Truncate, RejectsNonPositiveEps) {
  EXPECT_THROW(truncate(KernelSpec::gaussian(1, 1.0), 0.0), DomainError);
}

TEST(Tabulate, GaussianMassIsSqrtPi) {
  for (int n : {32, 64}) {
    const KernelTable t = tabulate(KernelSpec::gaussian(1, 1.0), make_grid(1, n, 2.0));
    EXPECT_NEAR(t.table_sum() + t.tail_moment(), std::sqrt(std::numbers::pi), 1e-4);
    EXPECT_NEAR(t.l1_norm(), std::sqrt(std::numbers::pi), 1e-10);
  }
}

TEST(Tabulate, GaussianMassInHigherDimensions) {
  const KernelTable t = tabulate(KernelSpec::gaussian(3, 0.7), make_grid(3, 16, 1.5));
  EXPECT_NEAR(t.mass_factor(), std::pow(std::sqrt(std::numbers::pi) * 0.7, 3), 1e-3);
}

TEST(Tabulate, BallIndicatorNorm) {
  const KernelTable t = tabulate(KernelSpec::ball_indicator(2, 2.0, 0.5), make_grid(2, 32, 1.0));
  EXPECT_NEAR(t.l1_norm(), 2.0 * std::numbers::pi * 0.25, 1e-9);
  const KernelTable t1 = tabulate(KernelSpec::ball_indicator(1, 2.0, 0.5), make_grid(1, 32, 1.0));
  EXPECT_NEAR(t1.l1_norm(), 2.0, 1e-12);
}

TEST(Tabulate, FractionalIsNotIntegrable) {
  const KernelTable t = tabulate(KernelSpec::fractional(1, 0.5), make_grid(1, 64, 2.0));
  EXPECT_FALSE(t.integrable());
  EXPECT_TRUE(std::isinf(t.l1_norm()));
  EXPECT_EQ(t.value({0, 0, 0}), 0.0);
}

TEST(Tabulate, NearEntriesAreCellPairAverages) {
  const double s = 0.5;
  const GridSpec g = make_grid(1, 64, 2.0);
  const KernelTable t = tabulate(KernelSpec::fractional(1, s), g);
  for (int z = 1; z <= 3; ++z) {
    const double expect = fractional_pair_average_1d(s, g.spacing, z);
    EXPECT_NEAR(t.value({z, 0, 0}), expect, 1e-6 * expect) << z;
    EXPECT_EQ(t.value({-z, 0, 0}), t.value({z, 0, 0}));
  }
}

TEST(Tabulate, EntriesAreExactlyEven) {
  for (int dim = 1; dim <= 3; ++dim) {
    const int n = dim == 3 ? 8 : 16;
    for (auto mode : {BoundaryMode::kFree, BoundaryMode::kPeriodic}) {
      const GridSpec g = make_grid(dim, n, 1.0, mode);
      for (const KernelSpec& k : sample_specs(dim)) {
        const KernelTable t = tabulate(k, g);
        for (std::size_t i = 0; i < t.values().size(); ++i) {
          const Index3 z = t.offset_of(i);
          const Index3 mz{-z[0], -z[1], -z[2]};
          if (!t.stores(mz)) continue;
          EXPECT_EQ(t.value(z), t.value(mz)) << k.id() << " dim " << dim << " mode " << to_string(mode) << " z " << z[0] << "," << z[1] << "," << z[2];
        }
      }
    }
  }
}

TEST(Integrability, FractionalWeightedIntegral) {
  const GridSpec probe = make_grid(1, 64, 2.0);
  const IntegrabilityReport r = check_integrability(KernelSpec::fractional(1, 0.5), probe);
  EXPECT_TRUE(r.condition_int_holds);
  EXPECT_TRUE(std::isinf(r.l1_norm));
  // 2 (1/(1-s) + 1/s)
  EXPECT_NEAR(r.weighted_integral, 8.0, 1e-4);
}

TEST(Integrability, GaussianFinite) {
  const IntegrabilityReport r =
      check_integrability(KernelSpec::gaussian(2, 1.0), make_grid(2, 32, 2.0));
  EXPECT_TRUE(r.condition_int_holds);
  EXPECT_NEAR(r.l1_norm, std::numbers::pi, 1e-5);
}

TEST(Integrability, TabulatedStrongSingularityFails) {
  const GridSpec g = make_grid(1, 64, 2.0);
  Field samples(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    samples[i] = std::pow(std::abs(g.center(i)[0]), -2.5);
  const KernelSpec k = KernelSpec::tabulated(samples);
  const IntegrabilityReport r = check_integrability(k, g);
  EXPECT_FALSE(r.condition_int_holds);
  EXPECT_FALSE(r.diagnostic.empty());
  EXPECT_THROW(tabulate(k, g), DomainError);
}

TEST(Integrability, TabulatedMildSingularityHolds) {
  const GridSpec g = make_grid(1, 64, 2.0);
  Field samples(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    samples[i] = std::pow(std::abs(g.center(i)[0]), -1.5);
  const IntegrabilityReport r = check_integrability(KernelSpec::tabulated(samples), g);
  EXPECT_TRUE(r.condition_int_holds);
}

TEST(RearrangeKernel, RadialDecreasingIsFixed) {
  // equidistant offsets agree only to rounding, so ties may swap
  for (int dim = 1; dim <= 3; ++dim) {
    const GridSpec g = make_grid(dim, dim == 3 ? 8 : 16, 2.0);
    const KernelTable t = tabulate(KernelSpec::gaussian(dim, 0.6), g);
    const KernelTable r = rearrange_kernel(t);
    for (std::size_t i = 0; i < t.values().size(); ++i)
      EXPECT_NEAR(r.values()[i], t.values()[i], 1e-15 * t.values()[i]);
  }
}

TEST(RearrangeKernel, PreservesLpNorms) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto mode : {BoundaryMode::kFree, BoundaryMode::kPeriodic}) {
    const GridSpec g = make_grid(2, 8, 1.0, mode);
    const KernelTable layout = tabulate(KernelSpec::gaussian(2, 1.0), g);
    std::vector<double> v(layout.values().size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Index3 z = layout.offset_of(i);
      const Index3 mz{-z[0], -z[1], -z[2]};
      if (!layout.stores(z) || !layout.stores(mz)) continue;
      const std::size_t m = layout.index_of(mz);
      if (m < i) continue;
      v[i] = v[m] = u(rng);
    }
    const KernelTable t = KernelTable::from_values(g, v, "random");
    const KernelTable r = rearrange_kernel(t);
    for (int p : {1, 2}) {
      double a = 0.0;
      double b = 0.0;
      for (double x : t.values()) a += std::pow(x, p);
      for (double x : r.values()) b += std::pow(x, p);
      EXPECT_NEAR(b, a, 1e-13 * a);
    }
    std::vector<double> sa(t.values().begin(), t.values().end());
    std::vector<double> sb(r.values().begin(), r.values().end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    EXPECT_EQ(sa, sb);
  }
}

TEST(RearrangeKernel, CentersTranslatedBump) {
  const int n = 16;
  const GridSpec g = make_grid(1, n, 2.0, BoundaryMode::kPeriodic);
  std::vector<double> v(n, 0.0);
  // bump centered at offset +5 and its mirror at -5
  const double bump[] = {1.0, 3.0, 1.0};
  for (int k = -1; k <= 1; ++k) {
    v[(5 + k + n) % n] = bump[k + 1];
    v[(-5 - k + n) % n] = bump[k + 1];
  }
  const KernelTable r = rearrange_kernel(KernelTable::from_values(g, v, "bump"));
  // oracle: offsets ordered by (|z|, z), values by descending sort
  std::vector<int> offsets;
  for (int z = -n / 2; z < n / 2; ++z) offsets.push_back(z);
  std::sort(offsets.begin(), offsets.end(), [](int a, int b) {
    return a * a != b * b ? a * a < b * b : a < b;
  });
  std::vector<double> sorted(v);
  std::sort(sorted.rbegin(), sorted.rend());
  for (int k = 0; k < n; ++k) EXPECT_EQ(r.value({offsets[k], 0, 0}), sorted[k]) << offsets[k];
  EXPECT_EQ(r.value({0, 0, 0}), 3.0);
  for (int z = 1; z < n / 2; ++z) {
    EXPECT_LE(r.value({z, 0, 0}), r.value({z - 1, 0, 0}));
    EXPECT_LE(r.value({-z, 0, 0}), r.value({1 - z, 0, 0}));
  }
}

TEST(RearrangeKernel, RejectsNonIntegrable) {
  const KernelTable t = tabulate(KernelSpec::fractional(1, 0.5), make_grid(1, 16, 1.0));
  EXPECT_THROW(rearrange_kernel(t), DomainError);
}

TEST(LowerBound, BallIndicator) {
  const GridSpec g = make_grid(2, 32, 2.0);
  const auto lb = check_lower_bound(tabulate(KernelSpec::ball_indicator(2, 2.0, 0.5), g));
  ASSERT_TRUE(lb.has_value());
  EXPECT_DOUBLE_EQ(lb->mu, 2.0);
  EXPECT_NEAR(lb->radius, 0.5, g.spacing);
}

TEST(LowerBound, GaussianMinimumAtCorner) {
  for (int dim = 1; dim <= 2; ++dim) {
    const GridSpec g = make_grid(dim, 32, 3.0);
    const auto lb = check_lower_bound(tabulate(KernelSpec::gaussian(dim, 1.0), g));
    ASSERT_TRUE(lb.has_value());
    EXPECT_NEAR(lb->mu, std::exp(-9.0 * dim), 1e-12 * std::exp(-9.0 * dim));
    EXPECT_NEAR(lb->radius, 3.0 * std::sqrt(dim), g.spacing);
  }
}

TEST(LowerBound, AnnulusIsAbsent) {
  const GridSpec g = make_grid(2, 32, 4.0);
  const KernelSpec k = KernelSpec::tabulated(annulus_samples(g));
  EXPECT_FALSE(check_lower_bound(tabulate(k, g)).has_value());
}

TEST(PositiveDefinite, GaussianMatchesDirectTransform) {
  for (int dim = 1; dim <= 2; ++dim) {
    const GridSpec g = make_grid(dim, 16, 2.0, BoundaryMode::kPeriodic);
    const KernelTable t = tabulate(KernelSpec::gaussian(dim, 0.3), g);
    const PositiveDefiniteReport r = check_positive_definite(t);
    const std::vector<double> direct = oracle::direct_transform(t);
    const double lo = *std::min_element(direct.begin(), direct.end());
    const double hi = *std::max_element(direct.begin(), direct.end());
    EXPECT_TRUE(r.is_pd);
    EXPECT_GT(lo, 0.0);
    EXPECT_NEAR(r.min_fourier_coefficient, lo, 1e-12 * hi);
    EXPECT_NEAR(r.max_fourier_coefficient, hi, 1e-12 * hi);
  }
}

TEST(PositiveDefinite, AnnulusIsNot) {
  const GridSpec g = make_grid(1, 32, 4.0, BoundaryMode::kPeriodic);
  std::vector<double> v(32, 0.0);
  for (int z = -16; z < 16; ++z) {
    const double r = std::abs(z * g.spacing);
    if (r >= 1.0 && r <= 2.0) v[(z + 32) % 32] = 1.0;
  }
  const KernelTable t = KernelTable::from_values(g, v, "annulus");
  const PositiveDefiniteReport r = check_positive_definite(t);
  const std::vector<double> direct = oracle::direct_transform(t);
  EXPECT_FALSE(r.is_pd);
  EXPECT_LT(*std::min_element(direct.begin(), direct.end()), 0.0);
  EXPECT_NEAR(r.min_fourier_coefficient, *std::min_element(direct.begin(), direct.end()), 1e-12);
}

TEST(PositiveDefinite, SumOfPdKernelsIsPd) {
  const GridSpec g = make_grid(2, 16, 2.0, BoundaryMode::kPeriodic);
  const KernelTable t = tabulate(KernelSpec::gaussian(2, 0.5), g);
  std::vector<double> v(t.values().begin(), t.values().end());
  for (double& x : v) x *= 2.0;
  EXPECT_TRUE(check_positive_definite(KernelTable::from_values(g, v, "2g")).is_pd);
}

TEST(PositiveDefinite, RequiresPeriodicTable) {
  const KernelTable t = tabulate(KernelSpec::gaussian(1, 1.0), make_grid(1, 16, 2.0));
  EXPECT_THROW(check_positive_definite(t), StructuralError);
}

TEST(LensVolume, ClosedForms) {
  const double e = 0.3;
  EXPECT_DOUBLE_EQ(lens_volume(1, e, 0.0), 2 * e);
  EXPECT_NEAR(lens_volume(1, e, 0.2), 0.4, 1e-15);
  EXPECT_NEAR(lens_volume(2, e, 0.0), std::numbers::pi * e * e, 1e-15);
  EXPECT_NEAR(lens_volume(3, e, 0.0), 4.0 / 3.0 * std::numbers::pi * e * e * e, 1e-15);
  EXPECT_EQ(lens_volume(2, e, 0.7), 0.0);
}

TEST(LensVolume, MatchesCellCounting) {
  // fraction of a fine lattice inside both balls
  const double e = 1.0;
  const double d = 0.7;
  for (int dim = 2; dim <= 3; ++dim) {
    const int m = dim == 2 ? 2000 : 200;
    const double step = 2.0 * e / m;
    long long count = 0;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        for (int k = 0; k < (dim == 3 ? m : 1); ++k) {
          const double x = -e + (i + 0.5) * step;
          const double y = -e + (j + 0.5) * step;
          const double z = dim == 3 ? -e + (k + 0.5) * step : 0.0;
          const double r0 = x * x + y * y + z * z;
          const double r1 = (x - d) * (x - d) + y * y + z * z;
          if (r0 <= e * e && r1 <= e * e) ++count;
        }
      }
    }
    const double approx = count * std::pow(step, dim);
    EXPECT_NEAR(lens_volume(dim, e, d), approx, 2e-3 * approx) << dim;
  }
}

TEST(ConditionPos, GaussianPositiveAndMatchesFineQuadrature) {
  const GridSpec g = make_grid(1, 256, 4.0);
  const KernelTable t = tabulate(KernelSpec::gaussian(1, 1.0), g);
  const double eps = 4 * g.spacing;
  const std::vector<Point3> points{{g.spacing, 0, 0}, {2 * g.spacing, 0, 0}, {0.5, 0, 0}};
  const std::vector<double> eps_list{eps};
  const ConditionPosReport r = check_condition_pos(t, points, eps_list);
  ASSERT_EQ(r.samples.size(), 3u);
  for (const auto& s : r.samples) {
    ASSERT_FALSE(s.skipped);
    EXPECT_GT(s.value, 0.0);
    // oracle: Simpson on the continuous integrand with 20000 panels
    const int panels = 20000;
    const double a = -2 * eps;
    const double step = 4 * eps / panels;
    double acc = 0.0;
    for (int i = 0; i <= panels; ++i) {
      const double z = a + i * step;
      const double w = (i == 0 || i == panels) ? 1 : (i % 2 ? 4 : 2);
      acc += w * (2 * eps - std::abs(z)) *
             (std::exp(-z * z) - std::exp(-(s.x[0] + z) * (s.x[0] + z)));
    }
    acc *= step / 3;
    EXPECT_NEAR(s.value, acc, 0.05 * acc);
  }
}

TEST(ConditionPos, ZeroShiftGivesZero) {
  const GridSpec g = make_grid(2, 32, 2.0);
  const KernelTable t = tabulate(KernelSpec::fractional(2, 0.5), g);
  const std::vector<Point3> points{{0, 0, 0}};
  const std::vector<double> eps_list{2 * g.spacing, 4 * g.spacing};
  const ConditionPosReport r = check_condition_pos(t, points, eps_list);
  for (const auto& s : r.samples) EXPECT_EQ(s.value, 0.0);
}

TEST(ConditionPos, PdKernelNonnegative) {
  const GridSpec g = make_grid(2, 32, 2.0, BoundaryMode::kPeriodic);
  const KernelTable t = tabulate(KernelSpec::gaussian(2, 0.8), g);
  ASSERT_TRUE(check_positive_definite(t).is_pd);
  std::vector<Point3> points;
  for (int k = 1; k <= 4; ++k) points.push_back({k * g.spacing, (k % 2) * g.spacing, 0});
  const std::vector<double> eps_list{2 * g.spacing, 3 * g.spacing};
  for (const auto& s : check_condition_pos(t, points, eps_list).samples)
    if (!s.skipped) EXPECT_GE(s.value, -1e-12);
}

TEST(ConditionPos, FarShiftIsSkippedWithWarning) {
  const GridSpec g = make_grid(1, 16, 1.0);
  const KernelTable t = tabulate(KernelSpec::gaussian(1, 1.0), g);
  const std::vector<Point3> points{{0.95 * 2.0, 0, 0}};
  const std::vector<double> eps_list{2 * g.spacing};
  const ConditionPosReport r = check_condition_pos(t, points, eps_list);
  ASSERT_EQ(r.samples.size(), 1u);
  EXPECT_TRUE(r.samples[0].skipped);
  EXPECT_FALSE(r.warnings.empty());
}
