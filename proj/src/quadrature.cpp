#include "quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <sstream>

#include "nlperim/error.hpp"

namespace nlperim::detail {

namespace {

GaussRule build_gauss_legendre(int order) {
  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

int default_order(int dimension) {
  switch (dimension) {
    case 1:
      return 7;
    case 2:
      return 5;
    default:
      return 4;
  }
}

struct Region {
  Point3 lo;
  Point3 hi;
  double coarse = 0.0;  // G(box)
  double fine = 0.0;    // sum of G(child)
  double error() const { return std::abs(fine - coarse); }
  bool operator<(const Region& other) const { return error() < other.error(); }
};

class TensorGauss {
 public:
  TensorGauss(const ScalarFn& g, int dimension)
      : g_(g), dimension_(dimension), rule_(gauss_legendre(default_order(dimension))) {}

  double apply(const Point3& lo, const Point3& hi) {
    const int q = static_cast<int>(rule_.nodes.size());
    Point3 half{0, 0, 0};
    Point3 mid{0, 0, 0};
    double jac = 1.0;
    for (int d = 0; d < dimension_; ++d) {
      half[d] = 0.5 * (hi[d] - lo[d]);
      mid[d] = 0.5 * (hi[d] + lo[d]);
      jac *= half[d];
    }
    double sum = 0.0;
    const int total = dimension_ == 1 ? q : dimension_ == 2 ? q * q : q * q * q;
    for (int k = 0; k < total; ++k) {
      int rem = k;
      double w = 1.0;
      Point3 x{0, 0, 0};
      for (int d = 0; d < dimension_; ++d) {
        const int i = rem % q;
        rem /= q;
        x[d] = mid[d] + half[d] * rule_.nodes[i];
        w *= rule_.weights[i];
      }
      sum += w * g_(x);
    }
    evaluations_ += static_cast<std::size_t>(total);
    return sum * jac;
  }

  std::size_t evaluations() const { return evaluations_; }

 private:
  const ScalarFn& g_;
  int dimension_;
  const GaussRule& rule_;
  std::size_t evaluations_ = 0;
};

Region make_region(TensorGauss& tg, int dimension, const Point3& lo, const Point3& hi) {
  Region r{lo, hi, tg.apply(lo, hi), 0.0};
  const int children = 1 << dimension;
  for (int c = 0; c < children; ++c) {
    Point3 clo = lo;
    Point3 chi = hi;
    for (int d = 0; d < dimension; ++d) {
      const double mid = 0.5 * (lo[d] + hi[d]);
      if (c & (1 << d)) {
        clo[d] = mid;
      } else {
        chi[d] = mid;
      }
    }
    r.fine += tg.apply(clo, chi);
  }
  return r;
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
  static std::mutex m;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(m);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_gauss_legendre(order)).first;
  return it->second;
}

AdaptiveResult integrate_box_adaptive(const ScalarFn& g, int dimension, const Point3& lo,
                                      const Point3& hi, double rel_tol, double abs_tol,
                                      std::size_t max_evaluations) {
  TensorGauss tg(g, dimension);
  std::priority_queue<Region> heap;
  Region root = make_region(tg, dimension, lo, hi);
  double value = root.fine;
  double error = root.error();
  heap.push(root);

  AdaptiveResult result;
  while (true) {
    if (error <= std::max(rel_tol * std::abs(value), abs_tol)) {
      result.converged = true;
      break;
    }
    if (tg.evaluations() >= max_evaluations || heap.empty()) break;
    Region worst = heap.top();
    heap.pop();
    value -= worst.fine;
    error -= worst.error();
    const int children = 1 << dimension;
    for (int c = 0; c < children; ++c) {
      Point3 clo = worst.lo;
      Point3 chi = worst.hi;
      for (int d = 0; d < dimension; ++d) {
        const double mid = 0.5 * (worst.lo[d] + worst.hi[d]);
        if (c & (1 << d)) {
          clo[d] = mid;
        } else {
          chi[d] = mid;
        }
      }
      Region child = make_region(tg, dimension, clo, chi);
      value += child.fine;
      error += child.error();
      heap.push(child);
    }
    error = std::max(error, 0.0);
  }
  result.value = value;
  result.error = error;
  result.evaluations = tg.evaluations();
  return result;
}

double integrate_shell(const ScalarFn& g, int dimension, double r_in, double r_out) {
  const GaussRule& radial = gauss_legendre(8);
  const double half = 0.5 * (r_out - r_in);
  const double mid = 0.5 * (r_out + r_in);
  double total = 0.0;
  for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
    const double r = mid + half * radial.nodes[i];
    double angular = 0.0;
    if (dimension == 1) {
      angular = g({r, 0, 0}) + g({-r, 0, 0});
    } else if (dimension == 2) {
      constexpr int kSteps = 128;
      for (int k = 0; k < kSteps; ++k) {
        const double phi = 2.0 * std::numbers::pi * (k + 0.5) / kSteps;
        angular += g({r * std::cos(phi), r * std::sin(phi), 0});
      }
      angular *= 2.0 * std::numbers::pi / kSteps;
    } else {
      const GaussRule& polar = gauss_legendre(24);
      constexpr int kSteps = 48;
      for (std::size_t j = 0; j < polar.nodes.size(); ++j) {
        const double z = polar.nodes[j];
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        double ring = 0.0;
        for (int k = 0; k < kSteps; ++k) {
          const double phi = 2.0 * std::numbers::pi * (k + 0.5) / kSteps;
          ring += g({r * rho * std::cos(phi), r * rho * std::sin(phi), r * z});
        }
        angular += polar.weights[j] * ring * 2.0 * std::numbers::pi / kSteps;
      }
    }
    total += radial.weights[i] * angular * std::pow(r, dimension - 1);
  }
  return total * half;
}

namespace {

// Drives a shell-by-shell series and decides convergence from the ratio of
// consecutive shell contributions.
template <typename ShellFn>
SeriesResult sum_series(ShellFn shell, double rel_tol, int max_shells) {
  SeriesResult out;
  double sum = 0.0;
  double prev = 0.0;
  int growing = 0;
  for (int k = 0; k < max_shells; ++k) {
    const double c = shell(k);
    out.shells = k + 1;
    if (!std::isfinite(c)) {
      out.value = sum;
      out.diagnostic = "non-finite shell contribution at shell " + std::to_string(k);
      return out;
    }
    sum += c;
    if (k >= 2) {
      if (c == 0.0) {
        if (prev == 0.0) {
          out.value = sum;
          out.converged = true;
          return out;
        }
      } else if (prev != 0.0) {
        const double ratio = std::abs(c / prev);
        if (ratio < 1.0) {
          growing = 0;
          const double tail = std::abs(c) * ratio / (1.0 - ratio);
          if (tail <= rel_tol * std::abs(sum) && std::abs(c) <= rel_tol * std::abs(sum)) {
            out.value = sum;
            out.converged = true;
            return out;
          }
        } else if (++growing >= 12) {
          std::ostringstream os;
          os << "shell contributions stopped decaying (ratio " << ratio << " after " << k + 1
             << " shells)";
          out.value = sum;
          out.diagnostic = os.str();
          return out;
        }
      }
    }
    prev = c;
  }
  out.value = sum;
  out.diagnostic = "no convergence within " + std::to_string(max_shells) + " shells";
  return out;
}

}  // namespace

SeriesResult sum_dyadic_shells(const ScalarFn& g, int dimension, double r0, int direction,
                               double rel_tol, int max_shells) {
  return sum_series(
      [&](int k) {
        if (direction > 0) return integrate_shell(g, dimension, std::ldexp(r0, k), std::ldexp(r0, k + 1));
        return integrate_shell(g, dimension, std::ldexp(r0, -k - 1), std::ldexp(r0, -k));
      },
      rel_tol, max_shells);
}

SeriesResult integrate_cube_exterior(const ScalarFn& g, int dimension, double a, double rel_tol,
                                     int max_shells) {
  const GaussRule& radial = gauss_legendre(8);
  const GaussRule& face = gauss_legendre(6);
  constexpr int kPanels = 4;  // per face axis

  auto face_integral = [&](double t) {
    double total = 0.0;
    for (int axis = 0; axis < dimension; ++axis) {
      for (int sign = -1; sign <= 1; sign += 2) {
        if (dimension == 1) {
          Point3 y{0, 0, 0};
          y[axis] = sign * t;
          total += g(y);
          continue;
        }
        const int free_dims = dimension - 1;
        const int per_axis = kPanels * static_cast<int>(face.nodes.size());
        const int count = free_dims == 1 ? per_axis : per_axis * per_axis;
        for (int k = 0; k < count; ++k) {
          int rem = k;
          double w = 1.0;
          Point3 y{0, 0, 0};
          y[axis] = sign * t;
          for (int d = 0; d < dimension; ++d) {
            if (d == axis) continue;
            const int j = rem % per_axis;
            rem /= per_axis;
            const int panel = j / static_cast<int>(face.nodes.size());
            const int node = j % static_cast<int>(face.nodes.size());
            const double plo = -1.0 + 2.0 * panel / kPanels;
            const double u = plo + (face.nodes[node] + 1.0) / kPanels;
            y[d] = t * u;
            w *= face.weights[node] / kPanels;
          }
          total += w * g(y);
        }
      }
    }
    return total * std::pow(t, dimension - 1);
  };

  return sum_series(
      [&](int k) {
        const double lo = std::ldexp(a, k);
        const double hi = std::ldexp(a, k + 1);
        const double half = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        double s = 0.0;
        for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
          s += radial.weights[i] * face_integral(mid + half * radial.nodes[i]);
        }
        return s * half;
      },
      rel_tol, max_shells);
}

}  // namespace nlperim::detail
