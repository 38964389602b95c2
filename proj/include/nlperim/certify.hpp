#pragma once

#include <cstddef>
#include <cstdint>

#include "nlperim/grid.hpp"
#include "nlperim/kernels.hpp"
#include "nlperim/rearrange.hpp"

namespace nlperim {

struct PotentialAudit {
  double v_min = 0.0;
  double v_max = 0.0;
  double upper_bound = 0.0;  // ||K||_1 + 1e-10
  bool bounds_ok = false;
  double v_mass = 0.0;         // h^N sum V
  double expected_mass = 0.0;  // mass(f) ||K||_1
  /// Exact discrete shortfall h^N sum f (mass_factor - 1_box * K): the part
  /// of f's interaction mass that lands outside the box (0 on a torus).
  double tail_deficit = 0.0;
  double mass_tolerance = 0.0;
  bool mass_ok = false;
  double boundary_shell_max = 0.0;  // far-field decay proxy (free mode)
};

/// Checks 0 <= V <= ||K||_1 and ||V||_1 = m ||K||_1 for V = f * K.
PotentialAudit potential_audit(const Field& f, const KernelTable& kernel);

inline constexpr double kDefaultTolF = 1e-6;
inline constexpr double kDefaultTolVFactor = 1e-4;

struct SecondVariation {
  double sv_max = 0.0;
  bool vacuous = false;  // the fractional region I is empty
  int trials = 0;
};

/// Random zero-mean perturbations xi in [-1, 1] supported on
/// I = {tol_f < f < 1 - tol_f}; sv_max = max Q(xi, xi).
SecondVariation second_variation_probe(const Field& f, const KernelTable& kernel, int trials,
                                       std::uint64_t seed, double tol_f = kDefaultTolF);

struct Certificate {
  double c = 0.0;
  double tol_f = kDefaultTolF;
  double tol_v = 0.0;
  double viol_s = 0.0;  // max over S of (c - V)
  double viol_n = 0.0;  // max over N of (V - c)
  double viol_i = 0.0;  // max over I of |V - c|
  std::size_t count_s = 0;
  std::size_t count_n = 0;
  std::size_t count_i = 0;
  double support_radius = 0.0;
  double box_radius = 0.0;
  double sv_max = 0.0;
  bool sv_vacuous = true;
  bool passed = false;
};

struct CertificateOptions {
  double tol_f = kDefaultTolF;
  /// Negative selects kDefaultTolVFactor * ||K||_1.
  double tol_v = -1.0;
  int sv_trials = 32;
  std::uint64_t seed = 0;
};

/// First-variation audit: V >= c on S = {f >= 1 - tol_f}, V <= c on
/// N = {f <= tol_f}, V = c on the rest, plus the second-variation probe and
/// the support check. Throws DomainError for f = 0.
Certificate first_variation_certificate(const Field& f, const KernelTable& kernel,
                                        const CertificateOptions& options = {});

struct SupportCheck {
  double support_radius = 0.0;
  bool ok = false;  // support_radius <= 0.9 * box half-width
};

SupportCheck compact_support_check(const Field& f, double tol_f = kDefaultTolF);

/// Median of a free-mode field under zero extension: always 0. Throws
/// StructuralError in periodic mode.
double median(const Field& u);

/// Smallest C with g(m) >= m^k / C on the table. Throws DomainError when some
/// g(m) is not positive.
double fit_poincare_constant(const ProfileTable& profile, double k);

struct PoincareReport {
  double lhs = 0.0;  // ||u - median(u)||_{L^k}
  double rhs = 0.0;  // C J_K(u)
  double allowance = 0.0;
  bool ok = false;
};

/// ok when lhs <= rhs (1 + allowance) with allowance
/// C_iso h / max(|supp u|^(1/N), h).
PoincareReport poincare_check(const Field& u, const KernelTable& kernel, double k, double c,
                              int thresholds, double c_iso = kDefaultIsoConstant);

}  // namespace nlperim
