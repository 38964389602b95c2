#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlperim/grid.hpp"

namespace nlperim {

enum class KernelFamily {
  kFractional,               // |x|^(-N-s)
  kAnisotropicFractional,    // |x|_B^(-N-s)
  kHeterogeneousFractional,  // a(x) |x|^(-N-s), lambda <= a <= Lambda
  kGaussian,                 // exp(-|x|^2 / sigma^2)
  kBallIndicator,            // mu * 1{|x| <= r}
  kTabulated,                // samples on a grid, see TabulatedSamples
};

const char* to_string(KernelFamily family);
std::optional<KernelFamily> parse_kernel_family(const std::string& name);

/// Built-in bounded modulations a(x) for the heterogeneous family. All are
/// even in x and take values in [lambda, Lambda].
enum class Amplitude {
  kConstant,  // lambda
  kAngular,   // lambda + (Lambda - lambda) x_1^2 / |x|^2
  kPeriodic,  // lambda + (Lambda - lambda) (1 + cos(2 pi x_1)) / 2
};

const char* to_string(Amplitude a);
std::optional<Amplitude> parse_amplitude(const std::string& name);

/// The norm |.|_B: a p-norm (p in [1, inf]) or sqrt(x^T A x) for a symmetric
/// positive-definite A given row-major.
struct AnisotropicNorm {
  double p = 2.0;
  std::vector<double> matrix;

  double operator()(const Point3& x, int dimension) const;
  double unit_ball_volume(int dimension) const;
  void validate(int dimension) const;
  std::string describe() const;
};

/// Sample-backed kernel. Evaluation interpolates the samples multilinearly
/// inside the sample box and is zero outside it; inside the innermost ring of
/// sample centers it extends the samples by the power law A |x|^-p fitted to
/// the two innermost radial averages, which is what lets a table carry a
/// singularity at the origin.
class TabulatedSamples {
 public:
  explicit TabulatedSamples(Field samples);

  const Field& samples() const { return samples_; }
  double exponent() const { return exponent_; }
  double evaluate(const Point3& x) const;

 private:
  Field samples_;
  double inner_radius_ = 0.0;
  double inner_value_ = 0.0;
  double exponent_ = 0.0;
};

struct KernelSpec {
  KernelFamily family = KernelFamily::kGaussian;
  int dimension = 1;
  double s = 0.5;
  AnisotropicNorm anisotropy;
  double amplitude_min = 1.0;  // lambda
  double amplitude_max = 1.0;  // Lambda
  Amplitude amplitude = Amplitude::kConstant;
  double sigma = 1.0;
  double mu = 1.0;
  double radius = 1.0;
  std::shared_ptr<const TabulatedSamples> table;
  std::string table_path;
  /// Pointwise cap min(K, cap); +inf means untruncated.
  double cap = std::numeric_limits<double>::infinity();

  static KernelSpec fractional(int dimension, double s);
  static KernelSpec anisotropic_fractional(int dimension, double s, AnisotropicNorm norm);
  static KernelSpec heterogeneous_fractional(int dimension, double s, double lambda,
                                             double Lambda, Amplitude amplitude);
  static KernelSpec gaussian(int dimension, double sigma);
  static KernelSpec ball_indicator(int dimension, double mu, double radius);
  static KernelSpec tabulated(Field samples, std::string path = {});

  /// Throws DomainError on out-of-range parameters.
  void validate() const;

  bool is_fractional() const;
  bool truncated() const { return cap < std::numeric_limits<double>::infinity(); }
  /// K(x) -> infinity as x -> 0.
  bool singular_at_origin() const;
  /// Radially symmetric and nonincreasing in |x|.
  bool radial_decreasing() const;

  /// Canonical description, stable across runs.
  std::string id() const;
};

/// Symmetrized pointwise value (K(x) + K(-x)) / 2.
/// Throws DomainError at x = 0 for kernels singular at the origin.
double eval_kernel(const KernelSpec& spec, const Point3& x);

/// min(K, 1/eps). Throws DomainError unless eps > 0.
KernelSpec truncate(const KernelSpec& spec, double eps);

struct IntegrabilityReport {
  double l1_norm = 0.0;           // +inf when the series diverges
  double weighted_integral = 0.0; // integral of min(|x|, 1) K
  bool condition_int_holds = false;
  std::string diagnostic;
};

/// Dyadic radial shell quadrature of min(|x|,1) K and of K.
IntegrabilityReport check_integrability(const KernelSpec& spec, const GridSpec& probe_grid);

/// Discrete kernel on the offset lattice of a grid.
///
/// Entry z approximates the cell-pair average
///   h^-2N int_{Q_0} int_{Q_z} K(x - y) dx dy,
/// the exact interaction weight of two cells. Free-mode tables hold the
/// offsets |z_i| <= n - 1 needed by zero-padded convolution (extent 2n per
/// axis); periodic tables hold the n^N torus offsets with all lattice images
/// folded in. Storage is wrapped (offset z lives at index z mod extent).
class KernelTable {
 public:
  struct Parts {
    GridSpec grid;
    std::vector<double> values;  // wrapped layout, extent^N entries
    double l1_norm = 0.0;        // full-space norm, +inf when not integrable
    double tail_moment = 0.0;    // free mode: mass outside the stored offset cube
    bool tail_flagged = false;   // tail_moment unavailable (stored as 0)
    double far_tail = 0.0;       // mass outside the field box [-L/2, L/2]^N
    bool singular_origin = false;
    int refined_radius = 0;
    std::string kernel_id;
    bool radial_decreasing = false;
  };

  explicit KernelTable(Parts parts);

  /// Table built directly from wrapped values (tests, rearrangement input).
  /// l1_norm is taken as the table sum and tails as zero.
  static KernelTable from_values(const GridSpec& grid, std::vector<double> values,
                                 std::string kernel_id);

  static int extent_for(const GridSpec& grid);

  const GridSpec& grid() const { return parts_.grid; }
  int extent() const { return extent_; }
  std::span<const double> values() const { return parts_.values; }

  Index3 offset_of(std::size_t linear) const;
  bool stores(const Index3& offset) const;
  std::size_t index_of(const Index3& offset) const;
  /// Zero for offsets the table does not store (free mode beyond the box).
  double value(const Index3& offset) const;

  double l1_norm() const { return parts_.l1_norm; }
  bool integrable() const { return std::isfinite(parts_.l1_norm); }
  double tail_moment() const { return parts_.tail_moment; }
  bool tail_flagged() const { return parts_.tail_flagged; }
  double far_tail() const { return parts_.far_tail; }
  bool singular_origin() const { return parts_.singular_origin; }
  int refined_radius() const { return parts_.refined_radius; }
  const std::string& kernel_id() const { return parts_.kernel_id; }
  bool radial_decreasing() const { return parts_.radial_decreasing; }

  /// h^N * sum of stored values.
  double table_sum() const { return table_sum_; }
  /// Interaction mass seen by one cell: table_sum + tail_moment in free mode,
  /// table_sum on the torus. Per_K(E) = mass(E) * mass_factor - Q(E, E).
  double mass_factor() const;

  /// r2c transform of the wrapped values (FFTW layout).
  std::span<const std::complex<double>> spectrum() const { return *spectrum_; }

 private:
  Parts parts_;
  int extent_ = 0;
  double table_sum_ = 0.0;
  std::shared_ptr<const std::vector<std::complex<double>>> spectrum_;
};

struct TabulateOptions {
  /// Chebyshev radius (in cells) of offsets integrated adaptively; negative
  /// selects 3 for kernels with a singular or capped origin and 0 otherwise.
  int refined_radius = -1;
  double rel_tol = 1e-6;
};

/// Throws DomainError when the kernel fails min(|x|,1) K in L^1.
KernelTable tabulate(const KernelSpec& spec, const GridSpec& grid, TabulateOptions options = {});

/// Discrete symmetric decreasing rearrangement: values sorted descending are
/// reassigned to offsets sorted by distance from the origin, ties in
/// lexicographic order of the offset. The result is even whenever every value
/// landing off the self-mirror cells comes in equal pairs. Throws DomainError
/// for non-integrable tables.
KernelTable rearrange_kernel(const KernelTable& table);

struct LowerBound {
  double mu = 0.0;
  double radius = 0.0;
};

/// Largest whole-cell radius r with min over B(0, r) of the table > 0, and
/// that minimum. Empty when a cell adjacent to the origin vanishes.
std::optional<LowerBound> check_lower_bound(const KernelTable& table);

struct PositiveDefiniteReport {
  bool is_pd = false;
  double min_fourier_coefficient = 0.0;
  double max_fourier_coefficient = 0.0;
};

/// Real parts of the DFT of a periodic table; PD iff all >= -1e-10 * max.
PositiveDefiniteReport check_positive_definite(const KernelTable& table);

/// |B(0,eps) cap B(z,eps)| for |z| = distance in dimension 1, 2 or 3.
double lens_volume(int dimension, double eps, double distance);

struct ConditionPosSample {
  Point3 x{0, 0, 0};
  double eps = 0.0;
  double value = 0.0;
  bool skipped = false;
};

struct ConditionPosReport {
  std::vector<ConditionPosSample> samples;
  std::vector<std::string> warnings;
};

/// Midpoint quadrature over the lattice of
///   int_{B(0,2 eps)} |B(0,eps) cap B(z,eps)| (K(z) - K(x+z)) dz.
/// x is snapped to the nearest lattice offset. Pairs whose shifted ball
/// leaves the stored offsets are skipped with a warning.
ConditionPosReport check_condition_pos(const KernelTable& table, std::span<const Point3> points,
                                       std::span<const double> eps_list);

}  // namespace nlperim
