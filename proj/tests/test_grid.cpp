#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "nlperim/convolution.hpp"
#include "nlperim/error.hpp"
#include "nlperim/grid.hpp"
#include "nlperim/kernels.hpp"
#include "nlperim/samplers.hpp"
#include "oracles.hpp"

using namespace nlperim;

TEST(Grid, MakeGridSetsSpacingFromHalfWidth) {
  const GridSpec g = make_grid(2, 64, 4.0);
  EXPECT_DOUBLE_EQ(g.spacing, 0.125);
  EXPECT_EQ(g.size(), 4096u);
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.125 * 0.125);
  EXPECT_DOUBLE_EQ(g.box_volume(), 64.0);
  EXPECT_DOUBLE_EQ(g.half_width(), 4.0);
}

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW(make_grid(4, 8, 1.0), Error);
  EXPECT_THROW(make_grid(2, 0, 1.0), Error);
  EXPECT_THROW(make_grid(2, 8, -1.0), Error);
}

TEST(Grid, RavelUnravelRoundTrip) {
  for (int dim = 1; dim <= 3; ++dim) {
    const GridSpec g = make_grid(dim, 6, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.ravel(g.unravel(i)), i);
  }
}

TEST(Grid, RowMajorLastAxisFastest) {
  const GridSpec g = make_grid(2, 4, 1.0);
  EXPECT_EQ(g.unravel(1), (Index3{0, 1, 0}));
  EXPECT_EQ(g.unravel(4), (Index3{1, 0, 0}));
}

TEST(Grid, CellCentersAreSymmetricAboutOrigin) {
  const GridSpec g = make_grid(1, 8, 2.0);
  EXPECT_DOUBLE_EQ(g.center(0)[0], -1.75);
  EXPECT_DOUBLE_EQ(g.center(7)[0], 1.75);
}

TEST(Mass, ZeroFieldHasZeroMass) {
  EXPECT_EQ(mass(Field(make_grid(2, 8, 1.0))), 0.0);
}

TEST(Mass, IndicatorOfKCells) {
  const GridSpec g = make_grid(3, 8, 2.0);
  Field f(g);
  for (std::size_t i = 0; i < 37; ++i) f[i * 3] = 1.0;
  EXPECT_NEAR(mass(f), 37 * g.cell_volume(), 1e-15);
}

TEST(Mass, IsLinear) {
  const GridSpec g = make_grid(2, 16, 2.0);
  std::mt19937_64 rng(1);
  const Field a = random_smooth_field(g, rng);
  const Field b = random_smooth_field(g, rng);
  Field c(g);
  for (std::size_t i = 0; i < g.size(); ++i) c[i] = a[i] + b[i];
  EXPECT_NEAR(mass(c), mass(a) + mass(b), 1e-12);
}

TEST(Field, IndicatorDetection) {
  const GridSpec g = make_grid(1, 4, 1.0);
  EXPECT_TRUE(Field(g, std::vector<double>{0, 1, 1, 0}).is_indicator());
  EXPECT_FALSE(Field(g, std::vector<double>{0, 0.5, 1, 0}).is_indicator());
}

TEST(Nlpg1, ByteLayout) {
  const GridSpec g = make_grid(2, 4, 2.0, BoundaryMode::kPeriodic);
  Field f(g);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = 0.25 * static_cast<double>(i);
  std::ostringstream os;
  write_nlpg1(os, f);
  const std::string bytes = os.str();
  ASSERT_EQ(bytes.size(), 5u + 1 + 1 + 4 + 8 + 16 * 8);
  EXPECT_EQ(bytes.substr(0, 5), "NLPG1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 1);
  std::uint32_t n = 0;
  std::memcpy(&n, bytes.data() + 7, 4);
  EXPECT_EQ(n, 4u);
  double h = 0.0;
  std::memcpy(&h, bytes.data() + 11, 8);
  EXPECT_EQ(h, 1.0);
  double v4 = 0.0;
  std::memcpy(&v4, bytes.data() + 19 + 4 * 8, 8);
  EXPECT_EQ(v4, 1.0);
}

TEST(Nlpg1, RoundTripIsExact) {
  const GridSpec g = make_grid(3, 5, 0.7);
  std::mt19937_64 rng(4);
  const Field f = random_smooth_field(g, rng);
  std::stringstream ss;
  write_nlpg1(ss, f);
  const Field back = read_nlpg1(ss);
  EXPECT_TRUE(back.grid() == g);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(back[i], f[i]);
}

TEST(Nlpg1, RejectsBadMagic) {
  std::stringstream ss("NLPG2xxxxxxxxxxxxxxxxxxxx");
  EXPECT_THROW(read_nlpg1(ss), Error);
}

TEST(Csv, CoordinatesThenValueWith17Digits) {
  const GridSpec g = make_grid(2, 4, 2.0);
  Field f(g);
  f[15] = 1.0 / 3.0;
  std::ostringstream os;
  write_csv(os, f);
  std::istringstream lines(os.str());
  std::string line;
  int count = 0;
  std::string last;
  while (std::getline(lines, line)) {
    ++count;
    last = line;
  }
  EXPECT_EQ(count, 16);
  EXPECT_EQ(last, "1.5,1.5,0.33333333333333331");
}

TEST(Convolve, ZeroFieldGivesZeroPotential) {
  const GridSpec g = make_grid(2, 8, 2.0);
  const KernelTable k = tabulate(KernelSpec::gaussian(2, 1.0), g);
  const Field v = convolve(Field(g), k);
  for (double x : v.values()) EXPECT_EQ(x, 0.0);
}

TEST(Convolve, DeltaResponseIsShiftedKernel) {
  for (auto mode : {BoundaryMode::kFree, BoundaryMode::kPeriodic}) {
    const GridSpec g = make_grid(2, 8, 2.0, mode);
    const KernelTable k = tabulate(KernelSpec::gaussian(2, 0.7), g);
    Field f(g);
    const std::size_t x0 = g.ravel({2, 5, 0});
    f[x0] = 1.0;
    const Field v = convolve(f, k);
    for (std::size_t x = 0; x < g.size(); ++x)
      EXPECT_NEAR(v[x], g.cell_volume() * k.value(oracle::offset(g, x, x0)), 1e-14);
  }
}

TEST(Convolve, MatchesQuadrupleLoopOn8x8) {
  std::mt19937_64 rng(11);
  for (auto mode : {BoundaryMode::kFree, BoundaryMode::kPeriodic}) {
    const GridSpec g = make_grid(2, 8, 2.0, mode);
    const KernelTable k = tabulate(truncate(KernelSpec::fractional(2, 0.4), 0.05), g);
    for (int t = 0; t < 5; ++t) {
      const Field f = random_smooth_field(g, rng);
      const Field fast = convolve(f, k);
      const Field slow = oracle::convolve(f, k);
      double scale = 0.0;
      for (double x : slow.values()) scale = std::max(scale, std::abs(x));
      for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-10 * scale);
    }
  }
}

TEST(BruteForceConvolve, AgreesWithIndependentLoop) {
  std::mt19937_64 rng(12);
  const GridSpec g = make_grid(3, 6, 1.5);
  const KernelTable k = tabulate(KernelSpec::gaussian(3, 0.8), g);
  const Field f = random_indicator(g, rng);
  const Field a = brute_force_convolve(f, k);
  const Field b = oracle::convolve(f, k);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-13);
}

TEST(BruteForceConvolve, RefusesLargeGrids) {
  const GridSpec g = make_grid(2, 65, 2.0);
  const KernelTable k = tabulate(KernelSpec::gaussian(2, 1.0), g);
  EXPECT_THROW(brute_force_convolve(Field(g), k), StructuralError);
}

TEST(Convolve, RejectsGridMismatch) {
  const KernelTable k = tabulate(KernelSpec::gaussian(2, 1.0), make_grid(2, 8, 2.0));
  EXPECT_THROW(convolve(Field(make_grid(2, 16, 2.0)), k), Error);
}
