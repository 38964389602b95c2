#include "nlperim/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fft.hpp"
#include "nlperim/error.hpp"
#include "quadrature.hpp"

namespace nlperim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double unit_ball_volume_euclid(int dimension) {
  switch (dimension) {
    case 1:
      return 2.0;
    case 2:
      return std::numbers::pi;
    default:
      return 4.0 * std::numbers::pi / 3.0;
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 14695981039346656037ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

// Surface integral of g over the unit sphere S^{N-1}.
double sphere_integral(const std::function<double(const Point3&)>& g, int dimension) {
  if (dimension == 1) return g({1, 0, 0}) + g({-1, 0, 0});
  if (dimension == 2) {
    constexpr int kSteps = 1024;
    double sum = 0.0;
    for (int k = 0; k < kSteps; ++k) {
      const double phi = 2.0 * std::numbers::pi * (k + 0.5) / kSteps;
      sum += g({std::cos(phi), std::sin(phi), 0});
    }
    return sum * 2.0 * std::numbers::pi / kSteps;
  }
  const auto& polar = detail::gauss_legendre(48);
  constexpr int kSteps = 96;
  double sum = 0.0;
  for (std::size_t j = 0; j < polar.nodes.size(); ++j) {
    const double z = polar.nodes[j];
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    double ring = 0.0;
    for (int k = 0; k < kSteps; ++k) {
      const double phi = 2.0 * std::numbers::pi * (k + 0.5) / kSteps;
      ring += g({rho * std::cos(phi), rho * std::sin(phi), z});
    }
    sum += polar.weights[j] * ring * 2.0 * std::numbers::pi / kSteps;
  }
  return sum;
}

double amplitude_value(const KernelSpec& spec, const Point3& x, double r) {
  const double lo = spec.amplitude_min;
  const double hi = spec.amplitude_max;
  switch (spec.amplitude) {
    case Amplitude::kConstant:
      return lo;
    case Amplitude::kAngular:
      return r > 0.0 ? lo + (hi - lo) * x[0] * x[0] / (r * r) : lo;
    case Amplitude::kPeriodic:
      return lo + (hi - lo) * 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * x[0]));
  }
  return lo;
}

// Unsymmetrized, uncapped value.
double raw_value(const KernelSpec& spec, const Point3& x) {
  const int n = spec.dimension;
  const double r = norm(x, n);
  switch (spec.family) {
    case KernelFamily::kFractional:
      return std::pow(r, -n - spec.s);
    case KernelFamily::kAnisotropicFractional:
      return std::pow(spec.anisotropy(x, n), -n - spec.s);
    case KernelFamily::kHeterogeneousFractional:
      return amplitude_value(spec, x, r) * std::pow(r, -n - spec.s);
    case KernelFamily::kGaussian:
      return std::exp(-r * r / (spec.sigma * spec.sigma));
    case KernelFamily::kBallIndicator:
      return r <= spec.radius ? spec.mu : 0.0;
    case KernelFamily::kTabulated:
      return spec.table->evaluate(x);
  }
  return 0.0;
}

double capped_value(const KernelSpec& spec, const Point3& x) {
  return std::min(raw_value(spec, x), spec.cap);
}

// Evaluation without the origin check; used by quadratures that never hit 0.
double eval_unchecked(const KernelSpec& spec, const Point3& x) {
  if (spec.family != KernelFamily::kTabulated) return capped_value(spec, x);
  const Point3 mx{-x[0], -x[1], -x[2]};
  return 0.5 * (capped_value(spec, x) + capped_value(spec, mx));
}

// For a homogeneous fractional kernel a(theta) r^(-N-s), the angular factor.
bool homogeneous_fractional(const KernelSpec& spec) {
  if (spec.family == KernelFamily::kFractional || spec.family == KernelFamily::kAnisotropicFractional)
    return true;
  return spec.family == KernelFamily::kHeterogeneousFractional &&
         spec.amplitude != Amplitude::kPeriodic;
}

double angular_factor(const KernelSpec& spec, const Point3& theta) {
  const int n = spec.dimension;
  switch (spec.family) {
    case KernelFamily::kAnisotropicFractional:
      return std::pow(spec.anisotropy(theta, n), -n - spec.s);
    case KernelFamily::kHeterogeneousFractional:
      return amplitude_value(spec, theta, 1.0);
    default:
      return 1.0;
  }
}

}  // namespace

const char* to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::kFractional:
      return "fractional";
    case KernelFamily::kAnisotropicFractional:
      return "anisotropic_fractional";
    case KernelFamily::kHeterogeneousFractional:
      return "heterogeneous_fractional";
    case KernelFamily::kGaussian:
      return "gaussian";
    case KernelFamily::kBallIndicator:
      return "ball_indicator";
    case KernelFamily::kTabulated:
      return "tabulated";
  }
  return "unknown";
}

std::optional<KernelFamily> parse_kernel_family(const std::string& name) {
  for (auto f : {KernelFamily::kFractional, KernelFamily::kAnisotropicFractional,
                 KernelFamily::kHeterogeneousFractional, KernelFamily::kGaussian,
                 KernelFamily::kBallIndicator, KernelFamily::kTabulated}) {
    if (name == to_string(f)) return f;
  }
  return std::nullopt;
}

const char* to_string(Amplitude a) {
  switch (a) {
    case Amplitude::kConstant:
      return "constant";
    case Amplitude::kAngular:
      return "angular";
    case Amplitude::kPeriodic:
      return "periodic";
  }
  return "unknown";
}

std::optional<Amplitude> parse_amplitude(const std::string& name) {
  for (auto a : {Amplitude::kConstant, Amplitude::kAngular, Amplitude::kPeriodic}) {
    if (name == to_string(a)) return a;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// AnisotropicNorm

double AnisotropicNorm::operator()(const Point3& x, int dimension) const {
  if (!matrix.empty()) {
    double q = 0.0;
    for (int i = 0; i < dimension; ++i)
      for (int j = 0; j < dimension; ++j) q += x[i] * matrix[i * dimension + j] * x[j];
    return std::sqrt(std::max(q, 0.0));
  }
  if (std::isinf(p)) {
    double m = 0.0;
    for (int d = 0; d < dimension; ++d) m = std::max(m, std::abs(x[d]));
    return m;
  }
  if (p == 2.0) return norm(x, dimension);
  double s = 0.0;
  double scale = 0.0;
  for (int d = 0; d < dimension; ++d) scale = std::max(scale, std::abs(x[d]));
  if (scale == 0.0) return 0.0;
  for (int d = 0; d < dimension; ++d) s += std::pow(std::abs(x[d]) / scale, p);
  return scale * std::pow(s, 1.0 / p);
}

double AnisotropicNorm::unit_ball_volume(int dimension) const {
  if (!matrix.empty()) {
    double det = 0.0;
    const auto& a = matrix;
    if (dimension == 1) {
      det = a[0];
    } else if (dimension == 2) {
      det = a[0] * a[3] - a[1] * a[2];
    } else {
      det = a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
            a[2] * (a[3] * a[7] - a[4] * a[6]);
    }
    return unit_ball_volume_euclid(dimension) / std::sqrt(det);
  }
  if (std::isinf(p)) return std::pow(2.0, dimension);
  return std::pow(2.0 * std::tgamma(1.0 + 1.0 / p), dimension) / std::tgamma(1.0 + dimension / p);
}

void AnisotropicNorm::validate(int dimension) const {
  if (!matrix.empty()) {
    const auto n = static_cast<std::size_t>(dimension);
    if (matrix.size() != n * n) {
      throw DomainError("anisotropy matrix must have " + std::to_string(n * n) + " entries, got " +
                        std::to_string(matrix.size()));
    }
    for (int i = 0; i < dimension; ++i)
      for (int j = 0; j < dimension; ++j)
        if (matrix[i * dimension + j] != matrix[j * dimension + i])
          throw DomainError("anisotropy matrix must be symmetric");
    // Cholesky as the positive-definiteness test.
    std::vector<double> l(n * n, 0.0);
    for (int i = 0; i < dimension; ++i) {
      for (int j = 0; j <= i; ++j) {
        double sum = matrix[i * dimension + j];
        for (int k = 0; k < j; ++k) sum -= l[i * dimension + k] * l[j * dimension + k];
        if (i == j) {
          if (!(sum > 0.0)) throw DomainError("anisotropy matrix must be positive definite");
          l[i * dimension + i] = std::sqrt(sum);
        } else {
          l[i * dimension + j] = sum / l[j * dimension + j];
        }
      }
    }
    return;
  }
  if (!(p >= 1.0)) throw DomainError("anisotropy p-norm needs p in [1, inf], got " + fmt(p));
}

std::string AnisotropicNorm::describe() const {
  if (!matrix.empty()) {
    std::string s = "matrix[";
    for (std::size_t i = 0; i < matrix.size(); ++i) s += (i ? "," : "") + fmt(matrix[i]);
    return s + "]";
  }
  return std::isinf(p) ? "p=inf" : "p=" + fmt(p);
}

// ---------------------------------------------------------------------------
// TabulatedSamples

TabulatedSamples::TabulatedSamples(Field samples) : samples_(std::move(samples)) {
  for (double v : samples_.values()) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw DomainError("tabulated kernel samples must be finite and nonnegative");
  }
  const GridSpec& g = samples_.grid();
  if (g.cells_per_side % 2 != 0) return;  // a sample sits on the origin: bounded kernel

  // Radial rings of cell centers, innermost first.
  std::map<long long, std::pair<double, int>> rings;  // key: squared distance in (h/2)^2 units
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Index3 idx = g.unravel(i);
    long long key = 0;
    for (int d = 0; d < g.dimension; ++d) {
      const long long k = 2LL * idx[d] + 1 - g.cells_per_side;
      key += k * k;
    }
    auto& ring = rings[key];
    ring.first += samples_[i];
    ring.second += 1;
  }
  if (rings.size() < 3) return;
  auto it = rings.begin();
  double r[3];
  double a[3];
  for (int k = 0; k < 3; ++k, ++it) {
    r[k] = 0.5 * g.spacing * std::sqrt(static_cast<double>(it->first));
    a[k] = it->second.first / it->second.second;
  }
  if (!(a[0] > 0.0 && a[1] > 0.0 && a[2] > 0.0)) return;
  const double p01 = std::log(a[0] / a[1]) / std::log(r[1] / r[0]);
  const double p12 = std::log(a[1] / a[2]) / std::log(r[2] / r[1]);
  // Only a genuine power law (consistent across the first three rings) is
  // continued into the origin.
  if (p01 > 0.0 && std::abs(p01 - p12) <= 0.1 * p01) {
    exponent_ = p01;
    inner_radius_ = r[0];
    inner_value_ = a[0];
  }
}

double TabulatedSamples::evaluate(const Point3& x) const {
  const GridSpec& g = samples_.grid();
  const int dim = g.dimension;
  const double half = g.half_width();
  for (int d = 0; d < dim; ++d)
    if (std::abs(x[d]) > half) return 0.0;
  if (exponent_ > 0.0) {
    const double r = norm(x, dim);
    if (r < inner_radius_) return inner_value_ * std::pow(inner_radius_ / r, exponent_);
  }
  const int n = g.cells_per_side;
  int base[3] = {0, 0, 0};
  double frac[3] = {0, 0, 0};
  for (int d = 0; d < dim; ++d) {
    double t = (x[d] + half) / g.spacing - 0.5;
    t = std::clamp(t, 0.0, static_cast<double>(n - 1));
    base[d] = std::min(static_cast<int>(std::floor(t)), n - 2);
    frac[d] = t - base[d];
  }
  double sum = 0.0;
  for (int c = 0; c < (1 << dim); ++c) {
    double w = 1.0;
    Index3 idx{0, 0, 0};
    for (int d = 0; d < dim; ++d) {
      const bool up = (c >> d) & 1;
      idx[d] = base[d] + (up ? 1 : 0);
      w *= up ? frac[d] : 1.0 - frac[d];
    }
    if (w != 0.0) sum += w * samples_[g.ravel(idx)];
  }
  return sum;
}

// ---------------------------------------------------------------------------
// KernelSpec

KernelSpec KernelSpec::fractional(int dimension, double s) {
  KernelSpec k;
  k.family = KernelFamily::kFractional;
  k.dimension = dimension;
  k.s = s;
  k.validate();
  return k;
}

KernelSpec KernelSpec::anisotropic_fractional(int dimension, double s, AnisotropicNorm norm) {
  KernelSpec k;
  k.family = KernelFamily::kAnisotropicFractional;
  k.dimension = dimension;
  k.s = s;
  k.anisotropy = std::move(norm);
  k.validate();
  return k;
}

KernelSpec KernelSpec::heterogeneous_fractional(int dimension, double s, double lambda,
                                                double Lambda, Amplitude amplitude) {
  KernelSpec k;
  k.family = KernelFamily::kHeterogeneousFractional;
  k.dimension = dimension;
  k.s = s;
  k.amplitude_min = lambda;
  k.amplitude_max = Lambda;
  k.amplitude = amplitude;
  k.validate();
  return k;
}

KernelSpec KernelSpec::gaussian(int dimension, double sigma) {
  KernelSpec k;
  k.family = KernelFamily::kGaussian;
  k.dimension = dimension;
  k.sigma = sigma;
  k.validate();
  return k;
}

KernelSpec KernelSpec::ball_indicator(int dimension, double mu, double radius) {
  KernelSpec k;
  k.family = KernelFamily::kBallIndicator;
  k.dimension = dimension;
  k.mu = mu;
  k.radius = radius;
  k.validate();
  return k;
}

KernelSpec KernelSpec::tabulated(Field samples, std::string path) {
  KernelSpec k;
  k.family = KernelFamily::kTabulated;
  k.dimension = samples.grid().dimension;
  k.table = std::make_shared<const TabulatedSamples>(std::move(samples));
  k.table_path = std::move(path);
  k.validate();
  return k;
}

void KernelSpec::validate() const {
  if (dimension < 1 || dimension > 3)
    throw DomainError("kernel dimension must be 1, 2 or 3, got " + std::to_string(dimension));
  if (is_fractional() && !(s > 0.0 && s < 1.0))
    throw DomainError(std::string(to_string(family)) +
                      " kernel needs s in (0,1) (s in (0,1) is the range of the fractional "
                      "perimeter), got s = " + fmt(s));
  if (!(cap > 0.0)) throw DomainError("kernel cap must be positive");
  switch (family) {
    case KernelFamily::kAnisotropicFractional:
      anisotropy.validate(dimension);
      break;
    case KernelFamily::kHeterogeneousFractional:
      if (!(amplitude_min > 0.0) || !(amplitude_min <= amplitude_max) ||
          !std::isfinite(amplitude_max))
        throw DomainError("amplitude bounds need 0 < lambda <= Lambda, got (" +
                          fmt(amplitude_min) + ", " + fmt(amplitude_max) + ")");
      break;
    case KernelFamily::kGaussian:
      if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw DomainError("gaussian sigma must be positive, got " + fmt(sigma));
      break;
    case KernelFamily::kBallIndicator:
      if (!(mu > 0.0) || !std::isfinite(mu))
        throw DomainError("ball_indicator mu must be positive, got " + fmt(mu));
      if (!(radius > 0.0) || !std::isfinite(radius))
        throw DomainError("ball_indicator r must be positive, got " + fmt(radius));
      break;
    case KernelFamily::kTabulated:
      if (!table) throw DomainError("tabulated kernel has no samples");
      if (table->samples().grid().dimension != dimension)
        throw DomainError("tabulated kernel samples have the wrong dimension");
      break;
    default:
      break;
  }
}

bool KernelSpec::is_fractional() const {
  return family == KernelFamily::kFractional || family == KernelFamily::kAnisotropicFractional ||
         family == KernelFamily::kHeterogeneousFractional;
}

bool KernelSpec::singular_at_origin() const {
  if (truncated()) return false;
  if (is_fractional()) return true;
  return family == KernelFamily::kTabulated && table->exponent() > 0.0;
}

bool KernelSpec::radial_decreasing() const {
  switch (family) {
    case KernelFamily::kFractional:
    case KernelFamily::kGaussian:
    case KernelFamily::kBallIndicator:
      return true;
    case KernelFamily::kAnisotropicFractional:
      return anisotropy.matrix.empty() && anisotropy.p == 2.0;
    case KernelFamily::kHeterogeneousFractional:
      return amplitude == Amplitude::kConstant || amplitude_min == amplitude_max;
    default:
      return false;
  }
}

std::string KernelSpec::id() const {
  std::ostringstream os;
  os << to_string(family) << "(N=" << dimension;
  if (is_fractional()) os << ",s=" << fmt(s);
  switch (family) {
    case KernelFamily::kAnisotropicFractional:
      os << ",norm=" << anisotropy.describe();
      break;
    case KernelFamily::kHeterogeneousFractional:
      os << ",lambda=" << fmt(amplitude_min) << ",Lambda=" << fmt(amplitude_max)
         << ",a=" << to_string(amplitude);
      break;
    case KernelFamily::kGaussian:
      os << ",sigma=" << fmt(sigma);
      break;
    case KernelFamily::kBallIndicator:
      os << ",mu=" << fmt(mu) << ",r=" << fmt(radius);
      break;
    case KernelFamily::kTabulated: {
      const Field& f = table->samples();
      const auto v = f.values();
      std::ostringstream hex;
      hex << std::hex << std::setw(16) << std::setfill('0')
          << fnv1a(v.data(), v.size() * sizeof(double));
      os << ",n=" << f.grid().cells_per_side << ",h=" << fmt(f.grid().spacing)
         << ",samples=" << hex.str();
      if (!table_path.empty()) os << ",path=" << table_path;
      break;
    }
    default:
      break;
  }
  if (truncated()) os << ",cap=" << fmt(cap);
  os << ")";
  return os.str();
}

double eval_kernel(const KernelSpec& spec, const Point3& x) {
  if (spec.singular_at_origin() && norm(x, spec.dimension) == 0.0) {
    throw DomainError(std::string(to_string(spec.family)) +
                      " kernel is singular at the origin and cannot be evaluated at x = 0");
  }
  return eval_unchecked(spec, x);
}

KernelSpec truncate(const KernelSpec& spec, double eps) {
  if (!(eps > 0.0)) throw DomainError("truncation needs eps > 0, got " + fmt(eps));
  KernelSpec out = spec;
  out.cap = std::min(spec.cap, 1.0 / eps);
  return out;
}

// ---------------------------------------------------------------------------
// Integrability and norms

IntegrabilityReport check_integrability(const KernelSpec& spec, const GridSpec& probe_grid) {
  spec.validate();
  if (probe_grid.dimension != spec.dimension)
    throw StructuralError("integrability probe grid has dimension " +
                          std::to_string(probe_grid.dimension) + ", kernel has " +
                          std::to_string(spec.dimension));
  const int n = spec.dimension;
  constexpr double kTol = 1e-7;
  auto k = [&](const Point3& x) { return eval_unchecked(spec, x); };
  auto weighted = [&](const Point3& x) { return norm(x, n) * eval_unchecked(spec, x); };

  IntegrabilityReport out;
  const auto outer = detail::sum_dyadic_shells(k, n, 1.0, +1, kTol, 400);
  const auto inner_w = detail::sum_dyadic_shells(weighted, n, 1.0, -1, kTol, 6000);
  out.weighted_integral = inner_w.value + outer.value;
  out.condition_int_holds = outer.converged && inner_w.converged;
  if (!outer.converged) out.diagnostic = "far field: " + outer.diagnostic;
  if (!inner_w.converged) {
    out.diagnostic += (out.diagnostic.empty() ? "" : "; ") + std::string("near origin: ") +
                      inner_w.diagnostic;
  }
  if (!out.condition_int_holds) {
    out.weighted_integral = kInf;
    out.l1_norm = kInf;
    return out;
  }
  const auto inner = detail::sum_dyadic_shells(k, n, 1.0, -1, kTol, 6000);
  out.l1_norm = inner.converged ? inner.value + outer.value : kInf;
  return out;
}

namespace {

GridSpec probe_grid_for(const KernelSpec& spec) {
  return GridSpec{spec.dimension, 4, 1.0, BoundaryMode::kFree};
}

double l1_norm_of(const KernelSpec& spec) {
  const int n = spec.dimension;
  const double c = spec.cap;
  switch (spec.family) {
    case KernelFamily::kGaussian:
      if (c >= 1.0) return std::pow(std::sqrt(std::numbers::pi) * spec.sigma, n);
      break;
    case KernelFamily::kBallIndicator:
      return std::min(spec.mu, c) * unit_ball_volume_euclid(n) * std::pow(spec.radius, n);
    default:
      break;
  }
  if (spec.is_fractional()) {
    if (!spec.truncated()) return kInf;
    if (homogeneous_fractional(spec)) {
      // Per direction: int_0^inf min(a r^(-N-s), c) r^(N-1) dr
      //   = c^(s/(N+s)) a^(N/(N+s)) (1/N + 1/s).
      const double s = spec.s;
      if (spec.family == KernelFamily::kFractional ||
          (spec.family == KernelFamily::kHeterogeneousFractional &&
           spec.amplitude == Amplitude::kConstant)) {
        const double a = spec.family == KernelFamily::kFractional ? 1.0 : spec.amplitude_min;
        return unit_ball_volume_euclid(n) * std::pow(c, s / (n + s)) * std::pow(a, n / (n + s)) *
               (1.0 + n / s);
      }
      if (spec.family == KernelFamily::kAnisotropicFractional) {
        return spec.anisotropy.unit_ball_volume(n) * std::pow(c, s / (n + s)) * (1.0 + n / s);
      }
      const double ang = sphere_integral(
          [&](const Point3& t) { return std::pow(angular_factor(spec, t), n / (n + s)); }, n);
      return std::pow(c, s / (n + s)) * (1.0 / n + 1.0 / s) * ang;
    }
  }
  return check_integrability(spec, probe_grid_for(spec)).l1_norm;
}

struct TailResult {
  double value = 0.0;
  bool ok = true;
};

// Mass of the kernel outside the cube [-a, a]^N.
TailResult cube_tail(const KernelSpec& spec, double a) {
  const int n = spec.dimension;
  if (spec.family == KernelFamily::kGaussian && spec.cap >= 1.0) {
    const double l1 = std::pow(std::sqrt(std::numbers::pi) * spec.sigma, n);
    return {l1 * -std::expm1(n * std::log(std::erf(a / spec.sigma))), true};
  }
  if (spec.family == KernelFamily::kBallIndicator && spec.radius <= a) return {0.0, true};
  if (n == 1 && homogeneous_fractional(spec)) {
    const double s = spec.s;
    const double amp = angular_factor(spec, {1, 0, 0}) + angular_factor(spec, {-1, 0, 0});
    // The cap is inactive beyond a when a r^(-1-s) <= cap at r = a.
    const double amax = std::max(angular_factor(spec, {1, 0, 0}), angular_factor(spec, {-1, 0, 0}));
    if (amax * std::pow(a, -1.0 - s) <= spec.cap) return {amp * std::pow(a, -s) / s, true};
  }
  const auto res = detail::integrate_cube_exterior(
      [&](const Point3& x) { return eval_unchecked(spec, x); }, n, a, 1e-12, 400);
  if (!res.converged) return {0.0, false};
  return {res.value, true};
}

// Wrapped-layout helpers.
int rep(int i, int extent) { return i <= (extent - 1) / 2 ? i : i - extent; }

int wrap(int z, int extent) {
  const int r = z % extent;
  return r < 0 ? r + extent : r;
}

std::size_t cube_size(int dimension, int extent) {
  std::size_t s = 1;
  for (int d = 0; d < dimension; ++d) s *= static_cast<std::size_t>(extent);
  return s;
}

Index3 unravel_cube(std::size_t linear, int dimension, int extent) {
  Index3 idx{0, 0, 0};
  for (int d = dimension - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(linear % static_cast<std::size_t>(extent));
    linear /= static_cast<std::size_t>(extent);
  }
  return idx;
}

std::size_t ravel_cube(const Index3& idx, int dimension, int extent) {
  std::size_t linear = 0;
  for (int d = 0; d < dimension; ++d)
    linear = linear * static_cast<std::size_t>(extent) + static_cast<std::size_t>(idx[d]);
  return linear;
}

// Linear index of the mirror offset -z.
std::size_t mirror_index(std::size_t linear, int dimension, int extent) {
  Index3 idx = unravel_cube(linear, dimension, extent);
  for (int d = 0; d < dimension; ++d) idx[d] = wrap(-idx[d], extent);
  return ravel_cube(idx, dimension, extent);
}

class EntrySampler {
 public:
  EntrySampler(const KernelSpec& spec, const GridSpec& grid, int refined_radius, double rel_tol)
      : spec_(spec), grid_(grid), refined_(refined_radius), rel_tol_(rel_tol),
        singular_(spec.singular_at_origin()) {}

  // Entry for an arbitrary integer offset (no wrapping).
  double operator()(const Index3& z) const {
    const int n = grid_.dimension;
    int cheb = 0;
    for (int d = 0; d < n; ++d) cheb = std::max(cheb, std::abs(z[d]));
    if (cheb == 0 && singular_) return 0.0;
    if (refined_ > 0 && cheb <= refined_) return pair_average(z);
    Point3 x{0, 0, 0};
    for (int d = 0; d < n; ++d) x[d] = z[d] * grid_.spacing;
    return eval_unchecked(spec_, x);
  }

 private:
  // Average of K(h(z + u)) against the tent weight prod(1 - |u_i|) on [-1,1]^N,
  // integrated orthant by orthant so the tent kinks sit on region faces.
  double pair_average(const Index3& z) const {
    const int n = grid_.dimension;
    const double h = grid_.spacing;
    auto g = [&](const Point3& u) {
      Point3 x{0, 0, 0};
      double w = 1.0;
      for (int d = 0; d < n; ++d) {
        x[d] = h * (z[d] + u[d]);
        w *= 1.0 - std::abs(u[d]);
      }
      return w * eval_unchecked(spec_, x);
    };
    double total = 0.0;
    for (int c = 0; c < (1 << n); ++c) {
      Point3 lo{0, 0, 0};
      Point3 hi{0, 0, 0};
      for (int d = 0; d < n; ++d) {
        if ((c >> d) & 1) {
          lo[d] = 0.0;
          hi[d] = 1.0;
        } else {
          lo[d] = -1.0;
          hi[d] = 0.0;
        }
      }
      // near a singular origin the error estimate tracks the coarse rule
      const double tol = singular_ ? 0.1 * rel_tol_ : rel_tol_;
      const auto res = detail::integrate_box_adaptive(g, n, lo, hi, tol, 0.0, 200'000);
      total += res.value;
    }
    return total;
  }

  const KernelSpec& spec_;
  GridSpec grid_;
  int refined_;
  double rel_tol_;
  bool singular_;
};

std::vector<double> tabulate_free(const EntrySampler& entry, const GridSpec& grid, int extent) {
  const int dim = grid.dimension;
  const int n = grid.cells_per_side;
  const std::size_t total = cube_size(dim, extent);
  std::vector<double> values(total, 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t m = mirror_index(i, dim, extent);
    if (m < i) {
      values[i] = values[m];
      continue;
    }
    const Index3 w = unravel_cube(i, dim, extent);
    Index3 z{0, 0, 0};
    bool band = false;
    for (int d = 0; d < dim; ++d) {
      z[d] = rep(w[d], extent);
      if (z[d] == -n) band = true;
    }
    if (!band) values[i] = entry(z);
  }
  return values;
}

std::vector<double> tabulate_periodic(const KernelSpec& spec, const EntrySampler& entry,
                                      const GridSpec& grid) {
  const int dim = grid.dimension;
  const int n = grid.cells_per_side;
  const std::size_t total = cube_size(dim, n);
  std::vector<double> values(total, 0.0);

  // Shell-by-shell image sums; stop once a shell no longer moves the total.
  constexpr double kBudget = 1e6;
  const double per_side = std::pow(kBudget / static_cast<double>(total), 1.0 / dim);
  const int max_shell = std::max(1, static_cast<int>((per_side - 1.0) / 2.0));
  int used = 0;
  double running = 0.0;
  for (int s = 0; s <= max_shell; ++s) {
    double shell_sum = 0.0;
    const int side = 2 * s + 1;
    // in 1D the shell is just {-s, s}
    const std::size_t images = dim == 1 ? (s == 0 ? 1 : 2) : cube_size(dim, side);
    for (std::size_t im = 0; im < images; ++im) {
      Index3 j{0, 0, 0};
      int cheb = s;
      if (dim == 1) {
        j[0] = im == 0 ? s : -s;
      } else {
        j = unravel_cube(im, dim, side);
        cheb = 0;
        for (int d = 0; d < dim; ++d) {
          j[d] -= s;
          cheb = std::max(cheb, std::abs(j[d]));
        }
      }
      if (cheb != s) continue;
      for (std::size_t i = 0; i < total; ++i) {
        double v = 0.0;
        const std::size_t m = s == 0 ? mirror_index(i, dim, n) : i;
        if (m < i) {
          v = values[m];
        } else {
          const Index3 w = unravel_cube(i, dim, n);
          Index3 z{0, 0, 0};
          for (int d = 0; d < dim; ++d) z[d] = rep(w[d], n) + j[d] * n;
          v = entry(z);
        }
        values[i] += v;
        shell_sum += v;
      }
    }
    running += shell_sum;
    used = s;
    if (s >= 1 && shell_sum <= 1e-17 * running) break;
  }
  const double l = grid.side_length();
  const TailResult rest = cube_tail(spec, (used + 0.5) * l);
  const double spread = rest.value / std::pow(l, dim);
  for (double& v : values) v += spread;

  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t m = mirror_index(i, dim, n);
    if (m > i) {
      const double avg = 0.5 * (values[i] + values[m]);
      values[i] = avg;
      values[m] = avg;
    }
  }
  return values;
}

}  // namespace

// ---------------------------------------------------------------------------
// KernelTable

int KernelTable::extent_for(const GridSpec& grid) {
  return grid.mode == BoundaryMode::kFree ? 2 * grid.cells_per_side : grid.cells_per_side;
}

KernelTable::KernelTable(Parts parts) : parts_(std::move(parts)) {
  parts_.grid.validate();
  extent_ = extent_for(parts_.grid);
  const std::size_t total = cube_size(parts_.grid.dimension, extent_);
  if (parts_.values.size() != total) {
    throw StructuralError("kernel table needs " + std::to_string(total) + " values, got " +
                          std::to_string(parts_.values.size()));
  }
  table_sum_ = parts_.grid.cell_volume() * stable_sum(parts_.values);
  auto fft = detail::cube_fft(parts_.grid.dimension, extent_);
  auto spec = std::make_shared<std::vector<std::complex<double>>>(fft->complex_size());
  fft->forward(parts_.values, *spec);
  spectrum_ = std::move(spec);
}

KernelTable KernelTable::from_values(const GridSpec& grid, std::vector<double> values,
                                     std::string kernel_id) {
  grid.validate();
  const int extent = extent_for(grid);
  const int dim = grid.dimension;
  if (values.size() != cube_size(dim, extent)) {
    throw StructuralError("kernel table needs " + std::to_string(cube_size(dim, extent)) +
                          " values, got " + std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
      throw DomainError("kernel table values must be finite and nonnegative");
    if (values[i] != values[mirror_index(i, dim, extent)])
      throw DomainError("kernel table values must satisfy K(z) = K(-z)");
    if (grid.mode == BoundaryMode::kFree) {
      const Index3 w = unravel_cube(i, dim, extent);
      for (int d = 0; d < dim; ++d)
        if (rep(w[d], extent) == -grid.cells_per_side && values[i] != 0.0)
          throw StructuralError("free-mode kernel table has a nonzero entry at offset -n");
    }
  }
  Parts parts;
  parts.grid = grid;
  parts.values = std::move(values);
  parts.kernel_id = std::move(kernel_id);
  parts.l1_norm = grid.cell_volume() * stable_sum(parts.values);
  return KernelTable(std::move(parts));
}

Index3 KernelTable::offset_of(std::size_t linear) const {
  Index3 idx = unravel_cube(linear, parts_.grid.dimension, extent_);
  for (int d = 0; d < parts_.grid.dimension; ++d) idx[d] = rep(idx[d], extent_);
  return idx;
}

bool KernelTable::stores(const Index3& offset) const {
  if (parts_.grid.mode == BoundaryMode::kPeriodic) return true;
  const int n = parts_.grid.cells_per_side;
  for (int d = 0; d < parts_.grid.dimension; ++d)
    if (std::abs(offset[d]) > n - 1) return false;
  return true;
}

std::size_t KernelTable::index_of(const Index3& offset) const {
  Index3 w{0, 0, 0};
  for (int d = 0; d < parts_.grid.dimension; ++d) w[d] = wrap(offset[d], extent_);
  return ravel_cube(w, parts_.grid.dimension, extent_);
}

double KernelTable::value(const Index3& offset) const {
  if (!stores(offset)) return 0.0;
  return parts_.values[index_of(offset)];
}

double KernelTable::mass_factor() const {
  return parts_.grid.mode == BoundaryMode::kFree ? table_sum_ + parts_.tail_moment : table_sum_;
}

KernelTable tabulate(const KernelSpec& spec, const GridSpec& grid, TabulateOptions options) {
  spec.validate();
  grid.validate();
  if (grid.dimension != spec.dimension) {
    throw StructuralError("kernel dimension " + std::to_string(spec.dimension) +
                          " does not match grid dimension " + std::to_string(grid.dimension));
  }
  const bool singular = spec.singular_at_origin();
  const bool sharp_origin =
      spec.is_fractional() || (spec.family == KernelFamily::kTabulated && spec.table->exponent() > 0.0);
  int radius = options.refined_radius < 0 ? (sharp_origin ? 3 : 0) : options.refined_radius;
  if (singular && radius < 1) {
    throw DomainError(std::string(to_string(spec.family)) +
                      " kernel is singular at the origin; tabulation needs refined_radius >= 1");
  }
  radius = std::min(radius, grid.cells_per_side - 1);

  KernelTable::Parts parts;
  parts.grid = grid;
  parts.singular_origin = singular;
  parts.refined_radius = radius;
  parts.kernel_id = spec.id();
  parts.radial_decreasing = spec.radial_decreasing();

  if (spec.family == KernelFamily::kTabulated) {
    const auto report = check_integrability(spec, grid);
    if (!report.condition_int_holds) {
      throw DomainError("tabulated kernel fails min(|x|,1) K in L^1: " + report.diagnostic);
    }
    parts.l1_norm = report.l1_norm;
  } else {
    parts.l1_norm = l1_norm_of(spec);
  }

  const EntrySampler entry(spec, grid, radius, options.rel_tol);
  if (grid.mode == BoundaryMode::kFree) {
    parts.values = tabulate_free(entry, grid, KernelTable::extent_for(grid));
    const TailResult tail = cube_tail(spec, (grid.cells_per_side - 0.5) * grid.spacing);
    parts.tail_moment = tail.value;
    parts.tail_flagged = !tail.ok;
    const TailResult far = cube_tail(spec, grid.half_width());
    parts.far_tail = far.value;
    parts.tail_flagged = parts.tail_flagged || !far.ok;
  } else {
    parts.values = tabulate_periodic(spec, entry, grid);
  }
  return KernelTable(std::move(parts));
}

// ---------------------------------------------------------------------------
// Rearrangement and audits

KernelTable rearrange_kernel(const KernelTable& table) {
  if (!table.integrable()) {
    throw DomainError("rearrange_kernel needs an integrable (finite-valued) table; truncate first");
  }
  const GridSpec& grid = table.grid();
  const int dim = grid.dimension;
  const int extent = table.extent();
  const std::size_t total = cube_size(dim, extent);

  struct Slot {
    long long dist2;
    Index3 z;
    std::size_t index;
  };
  std::vector<Slot> slots;
  std::vector<double> sorted;
  for (std::size_t i = 0; i < total; ++i) {
    const Index3 z = table.offset_of(i);
    if (!table.stores(z)) continue;
    long long d2 = 0;
    for (int d = 0; d < dim; ++d) d2 += static_cast<long long>(z[d]) * z[d];
    slots.push_back({d2, z, i});
    sorted.push_back(table.values()[i]);
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    return a.z < b.z;
  });
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  std::vector<double> out(total, 0.0);
  for (std::size_t k = 0; k < slots.size(); ++k) out[slots[k].index] = sorted[k];

  KernelTable::Parts parts;
  parts.grid = grid;
  parts.values = std::move(out);
  parts.l1_norm = table.l1_norm();
  parts.tail_moment = table.tail_moment();
  parts.tail_flagged = table.tail_flagged();
  parts.far_tail = table.far_tail();
  parts.singular_origin = table.singular_origin();
  parts.refined_radius = table.refined_radius();
  parts.kernel_id = "rearranged(" + table.kernel_id() + ")";
  parts.radial_decreasing = true;
  return KernelTable(std::move(parts));
}

std::optional<LowerBound> check_lower_bound(const KernelTable& table) {
  const GridSpec& grid = table.grid();
  const int dim = grid.dimension;
  const int n = grid.cells_per_side;
  // Offsets inside the box-sized window |z_i| <= n/2, grouped by distance.
  std::map<long long, double> shell_min;
  const std::size_t total = cube_size(dim, table.extent());
  for (std::size_t i = 0; i < total; ++i) {
    const Index3 z = table.offset_of(i);
    long long d2 = 0;
    bool inside = true;
    for (int d = 0; d < dim; ++d) {
      if (std::abs(z[d]) > n / 2) inside = false;
      d2 += static_cast<long long>(z[d]) * z[d];
    }
    if (!inside || (d2 == 0 && table.singular_origin())) continue;
    auto [it, fresh] = shell_min.try_emplace(d2, table.values()[i]);
    if (!fresh) it->second = std::min(it->second, table.values()[i]);
  }
  double running = std::numeric_limits<double>::infinity();
  double mu = 0.0;
  int best = 0;
  int r = 1;
  auto it = shell_min.begin();
  const long long max_d2 = shell_min.empty() ? 0 : shell_min.rbegin()->first;
  while (true) {
    const long long r2 = static_cast<long long>(r) * r;
    for (; it != shell_min.end() && it->first <= r2; ++it) running = std::min(running, it->second);
    if (!(running > 0.0)) break;
    best = r;
    mu = running;
    if (r2 >= max_d2) break;
    ++r;
  }
  if (best == 0) return std::nullopt;
  return LowerBound{mu, best * grid.spacing};
}

PositiveDefiniteReport check_positive_definite(const KernelTable& table) {
  if (table.grid().mode != BoundaryMode::kPeriodic) {
    throw StructuralError("check_positive_definite needs a periodic-mode table");
  }
  PositiveDefiniteReport out;
  out.min_fourier_coefficient = std::numeric_limits<double>::infinity();
  out.max_fourier_coefficient = -std::numeric_limits<double>::infinity();
  for (const auto& c : table.spectrum()) {
    out.min_fourier_coefficient = std::min(out.min_fourier_coefficient, c.real());
    out.max_fourier_coefficient = std::max(out.max_fourier_coefficient, c.real());
  }
  out.is_pd = out.min_fourier_coefficient >= -1e-10 * std::abs(out.max_fourier_coefficient);
  return out;
}

double lens_volume(int dimension, double eps, double distance) {
  const double d = std::abs(distance);
  if (d >= 2.0 * eps) return 0.0;
  switch (dimension) {
    case 1:
      return 2.0 * eps - d;
    case 2:
      return 2.0 * eps * eps * std::acos(d / (2.0 * eps)) -
             0.5 * d * std::sqrt(4.0 * eps * eps - d * d);
    case 3:
      return std::numbers::pi / 12.0 * (4.0 * eps + d) * (2.0 * eps - d) * (2.0 * eps - d);
    default:
      throw StructuralError("lens_volume supports dimensions 1 to 3");
  }
}

ConditionPosReport check_condition_pos(const KernelTable& table, std::span<const Point3> points,
                                       std::span<const double> eps_list) {
  const GridSpec& grid = table.grid();
  const int dim = grid.dimension;
  const double h = grid.spacing;
  ConditionPosReport out;
  for (const Point3& x : points) {
    Index3 xz{0, 0, 0};
    for (int d = 0; d < dim; ++d) xz[d] = static_cast<int>(std::lround(x[d] / h));
    for (double eps : eps_list) {
      ConditionPosSample sample;
      sample.x = x;
      sample.eps = eps;
      if (!(eps > 0.0)) throw DomainError("check_condition_pos needs eps > 0");
      const int reach = static_cast<int>(std::floor(2.0 * eps / h));
      const int side = 2 * reach + 1;
      const std::size_t count = cube_size(dim, side);
      double sum = 0.0;
      for (std::size_t k = 0; k < count && !sample.skipped; ++k) {
        Index3 z = unravel_cube(k, dim, side);
        double r2 = 0.0;
        Index3 shifted{0, 0, 0};
        for (int d = 0; d < dim; ++d) {
          z[d] -= reach;
          r2 += static_cast<double>(z[d]) * z[d] * h * h;
          shifted[d] = z[d] + xz[d];
        }
        const double r = std::sqrt(r2);
        if (r >= 2.0 * eps) continue;
        if (!table.stores(z) || !table.stores(shifted)) {
          sample.skipped = true;
          break;
        }
        sum += lens_volume(dim, eps, r) * (table.value(z) - table.value(shifted));
      }
      if (sample.skipped) {
        std::ostringstream os;
        os << "condition (pos) sample at x = (";
        for (int d = 0; d < dim; ++d) os << (d ? ", " : "") << x[d];
        os << "), eps = " << eps << " skipped: shifted ball leaves the tabulated offsets";
        out.warnings.push_back(os.str());
      } else {
        sample.value = sum * grid.cell_volume();
      }
      out.samples.push_back(sample);
    }
  }
  return out;
}

}  // namespace nlperim
