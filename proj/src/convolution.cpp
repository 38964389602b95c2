#include "nlperim/convolution.hpp"

#include <algorithm>
#include <complex>
#include <vector>

#include "fft.hpp"
#include "nlperim/error.hpp"

namespace nlperim {

namespace {

void clamp_if_nonnegative(const Field& f, Field& v) {
  if (f.size() == 0 || f.min() < 0.0) return;
  for (double& x : v.values()) x = std::max(x, 0.0);
}

}  // namespace

Field convolve(const Field& f, const KernelTable& kernel) {
  require_same_grid(f.grid(), kernel.grid(), "convolve");
  const GridSpec& g = f.grid();
  const int dim = g.dimension;
  const int n = g.cells_per_side;
  const int extent = kernel.extent();
  auto fft = detail::cube_fft(dim, extent);

  std::vector<double> padded(fft->real_size(), 0.0);
  if (extent == n) {
    std::copy(f.values().begin(), f.values().end(), padded.begin());
  } else {
    for (std::size_t i = 0; i < f.size(); ++i) {
      const Index3 idx = g.unravel(i);
      std::size_t linear = 0;
      for (int d = 0; d < dim; ++d) linear = linear * extent + static_cast<std::size_t>(idx[d]);
      padded[linear] = f[i];
    }
  }
  std::vector<std::complex<double>> spec(fft->complex_size());
  fft->forward(padded, spec);
  const auto ks = kernel.spectrum();
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= ks[i];
  fft->inverse(spec, padded);

  const double scale = g.cell_volume() / static_cast<double>(fft->real_size());
  Field v(g);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t linear = i;
    if (extent != n) {
      const Index3 idx = g.unravel(i);
      linear = 0;
      for (int d = 0; d < dim; ++d) linear = linear * extent + static_cast<std::size_t>(idx[d]);
    }
    v[i] = padded[linear] * scale;
  }
  clamp_if_nonnegative(f, v);
  return v;
}

Field brute_force_convolve(const Field& f, const KernelTable& kernel) {
  require_same_grid(f.grid(), kernel.grid(), "brute_force_convolve");
  const GridSpec& g = f.grid();
  if (g.size() > kBruteForceLimit) {
    throw StructuralError("brute_force_convolve is limited to " +
                          std::to_string(kBruteForceLimit) + " cells, grid has " +
                          std::to_string(g.size()));
  }
  const int dim = g.dimension;
  Field v(g);
  for (std::size_t x = 0; x < g.size(); ++x) {
    const Index3 xi = g.unravel(x);
    double sum = 0.0;
    for (std::size_t y = 0; y < g.size(); ++y) {
      if (f[y] == 0.0) continue;
      const Index3 yi = g.unravel(y);
      Index3 z{0, 0, 0};
      for (int d = 0; d < dim; ++d) z[d] = xi[d] - yi[d];
      sum += f[y] * kernel.value(z);
    }
    v[x] = sum * g.cell_volume();
  }
  clamp_if_nonnegative(f, v);
  return v;
}

}  // namespace nlperim
