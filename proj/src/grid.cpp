#include "nlperim/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "nlperim/error.hpp"

namespace nlperim {

const char* to_string(BoundaryMode mode) {
  return mode == BoundaryMode::kFree ? "free" : "periodic";
}

void GridSpec::validate() const {
  if (dimension < 1 || dimension > 3) {
    throw StructuralError("grid dimension must be 1, 2 or 3, got " +
                          std::to_string(dimension));
  }
  if (cells_per_side < 4) {
    throw StructuralError("grid needs at least 4 cells per side, got " +
                          std::to_string(cells_per_side));
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw StructuralError("grid spacing must be positive and finite");
  }
}

std::size_t GridSpec::size() const {
  std::size_t total = 1;
  for (int d = 0; d < dimension; ++d) total *= static_cast<std::size_t>(cells_per_side);
  return total;
}

double GridSpec::cell_volume() const { return std::pow(spacing, dimension); }

double GridSpec::box_volume() const { return std::pow(side_length(), dimension); }

Index3 GridSpec::unravel(std::size_t linear) const {
  Index3 idx{0, 0, 0};
  const auto n = static_cast<std::size_t>(cells_per_side);
  for (int d = dimension - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(linear % n);
    linear /= n;
  }
  return idx;
}

std::size_t GridSpec::ravel(const Index3& idx) const {
  std::size_t linear = 0;
  const auto n = static_cast<std::size_t>(cells_per_side);
  for (int d = 0; d < dimension; ++d) linear = linear * n + static_cast<std::size_t>(idx[d]);
  return linear;
}

Point3 GridSpec::center(std::size_t linear) const {
  const Index3 idx = unravel(linear);
  Point3 x{0.0, 0.0, 0.0};
  for (int d = 0; d < dimension; ++d) x[d] = (idx[d] + 0.5) * spacing - half_width();
  return x;
}

GridSpec make_grid(int dimension, int cells_per_side, double half_width, BoundaryMode mode) {
  GridSpec g{dimension, cells_per_side, 2.0 * half_width / cells_per_side, mode};
  g.validate();
  return g;
}

std::string describe(const GridSpec& grid) {
  std::ostringstream os;
  os << "N=" << grid.dimension << " n=" << grid.cells_per_side << " h=" << grid.spacing
     << " mode=" << to_string(grid.mode);
  return os.str();
}

Field::Field(GridSpec grid, double fill) : grid_(grid) {
  grid_.validate();
  values_.assign(grid_.size(), fill);
}

Field::Field(GridSpec grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != grid_.size()) {
    throw StructuralError("field has " + std::to_string(values_.size()) +
                          " values but the grid has " + std::to_string(grid_.size()) +
                          " cells");
  }
}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }

double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool Field::is_indicator() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return v == 0.0 || v == 1.0; });
}

double stable_sum(std::span<const double> xs) {
  // Neumaier's variant of Kahan summation.
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

double mass(const Field& f) { return f.grid().cell_volume() * stable_sum(f.values()); }

double norm(const Point3& x, int dimension) {
  double s = 0.0;
  for (int d = 0; d < dimension; ++d) s += x[d] * x[d];
  return std::sqrt(s);
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) {
    throw StructuralError(std::string(what) + ": grid mismatch (" + describe(a) + " vs " +
                          describe(b) + ")");
  }
}

namespace {

constexpr char kMagic[5] = {'N', 'L', 'P', 'G', '1'};

template <typename T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw StructuralError("NLPG1: truncated stream");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_nlpg1(std::ostream& os, const Field& f) {
  const GridSpec& g = f.grid();
  os.write(kMagic, sizeof(kMagic));
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(g.dimension));
  put_le<std::uint8_t>(os, static_cast<std::uint8_t>(g.mode));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.cells_per_side));
  put_le<double>(os, g.spacing);
  for (double v : f.values()) put_le<double>(os, v);
  if (!os) throw StructuralError("NLPG1: write failed");
}

Field read_nlpg1(std::istream& is) {
  char magic[5];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw StructuralError("NLPG1: bad magic");
  }
  GridSpec g;
  g.dimension = get_le<std::uint8_t>(is);
  const auto mode = get_le<std::uint8_t>(is);
  if (mode > 1) throw StructuralError("NLPG1: unknown mode byte " + std::to_string(mode));
  g.mode = static_cast<BoundaryMode>(mode);
  g.cells_per_side = static_cast<int>(get_le<std::uint32_t>(is));
  g.spacing = get_le<double>(is);
  g.validate();
  std::vector<double> values(g.size());
  for (double& v : values) v = get_le<double>(is);
  if (is.peek() != std::char_traits<char>::eof()) {
    throw StructuralError("NLPG1: trailing bytes after " + std::to_string(values.size()) +
                          " values");
  }
  return Field(g, std::move(values));
}

void save_nlpg1(const std::string& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw StructuralError("cannot open " + path + " for writing");
  write_nlpg1(os, f);
}

Field load_nlpg1(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw StructuralError("cannot open " + path);
  return read_nlpg1(is);
}

void write_csv(std::ostream& os, const Field& f) {
  const GridSpec& g = f.grid();
  const auto old_precision = os.precision(17);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Point3 x = g.center(i);
    for (int d = 0; d < g.dimension; ++d) os << x[d] << ',';
    os << f[i] << '\n';
  }
  os.precision(old_precision);
}

}  // namespace nlperim
