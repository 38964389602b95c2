#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nlperim {

enum class BoundaryMode : std::uint8_t { kFree = 0, kPeriodic = 1 };

const char* to_string(BoundaryMode mode);

using Index3 = std::array<int, 3>;
using Point3 = std::array<double, 3>;

/// Uniform lattice of n^N cells with spacing h, centered at the origin.
///
/// Cell i along an axis has center (i + 1/2) h - L/2 with L = n h, so for
/// even n the origin sits on a cell corner. In free mode fields vanish
/// outside the box; in periodic mode the box is a torus.
struct GridSpec {
  int dimension = 1;
  int cells_per_side = 4;
  double spacing = 1.0;
  BoundaryMode mode = BoundaryMode::kFree;

  /// Throws StructuralError unless 1 <= N <= 3, n >= 4 and h > 0.
  void validate() const;

  std::size_t size() const;
  double cell_volume() const;
  double side_length() const { return cells_per_side * spacing; }
  double half_width() const { return 0.5 * side_length(); }
  double box_volume() const;

  Index3 unravel(std::size_t linear) const;
  std::size_t ravel(const Index3& idx) const;
  Point3 center(std::size_t linear) const;

  bool operator==(const GridSpec&) const = default;
};

/// Grid with the given half-width: h = 2 * half_width / n.
GridSpec make_grid(int dimension, int cells_per_side, double half_width,
                   BoundaryMode mode = BoundaryMode::kFree);

std::string describe(const GridSpec& grid);

/// Row-major grid function. Density fields take values in [0,1]; the type
/// itself does not enforce that.
class Field {
 public:
  Field() = default;
  explicit Field(GridSpec grid, double fill = 0.0);
  Field(GridSpec grid, std::vector<double> values);

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  double min() const;
  double max() const;

  bool is_indicator() const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// h^N * sum of values.
double mass(const Field& f);

/// Euclidean norm of a point restricted to the first `dimension` coordinates.
double norm(const Point3& x, int dimension);

/// Throws StructuralError naming `what` when the grids differ.
void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

/// Deterministic compensated sum.
double stable_sum(std::span<const double> xs);

// NLPG1 dump: magic "NLPG1", then little-endian u8 dimension, u8 mode,
// u32 cells_per_side, f64 spacing and n^N f64 values, row-major.
void write_nlpg1(std::ostream& os, const Field& f);
Field read_nlpg1(std::istream& is);
void save_nlpg1(const std::string& path, const Field& f);
Field load_nlpg1(const std::string& path);

// One line per cell: N center coordinates then the value, 17 significant
// digits, comma separated.
void write_csv(std::ostream& os, const Field& f);

}  // namespace nlperim
