#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "nlperim/grid.hpp"

namespace nlperim::detail {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Cached Gauss-Legendre rule of the given order.
const GaussRule& gauss_legendre(int order);

using ScalarFn = std::function<double(const Point3&)>;

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = false;
  std::size_t evaluations = 0;
};

// Globally adaptive dyadic subdivision of the box [lo, hi] (first N coords).
// Each region is scored by |G(box) - sum G(children)| with a tensor Gauss rule
// G; the worst region is split until the summed error meets
// max(rel_tol * |value|, abs_tol) or the evaluation budget runs out.
AdaptiveResult integrate_box_adaptive(const ScalarFn& g, int dimension, const Point3& lo,
                                      const Point3& hi, double rel_tol, double abs_tol,
                                      std::size_t max_evaluations = 4'000'000);

// Spherical-shell quadrature of F over {r_in <= |y| <= r_out}.
double integrate_shell(const ScalarFn& g, int dimension, double r_in, double r_out);

struct SeriesResult {
  double value = 0.0;
  bool converged = false;
  int shells = 0;
  std::string diagnostic;
};

// Sums dyadic shells [r0 2^k, r0 2^(k+1)] outward (direction = +1) or
// [r0 2^-(k+1), r0 2^-k] inward (direction = -1) until the geometric-tail
// bound of the remaining shells falls under rel_tol * |sum|.
SeriesResult sum_dyadic_shells(const ScalarFn& g, int dimension, double r0, int direction,
                               double rel_tol, int max_shells);

// Integral of g over the exterior of the cube [-a, a]^N, in cube-gauge
// coordinates (one radial variable per face, tensor Gauss on each face).
SeriesResult integrate_cube_exterior(const ScalarFn& g, int dimension, double a,
                                     double rel_tol = 1e-12, int max_shells = 400);

}  // namespace nlperim::detail
