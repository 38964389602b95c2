#pragma once

#include <random>

#include "nlperim/grid.hpp"

namespace nlperim {

// Random test fields. All supports stay inside the central 3/4 of the box so
// free-mode fields are compactly supported.

Field random_bernoulli_set(const GridSpec& grid, std::mt19937_64& rng, double p = 0.5);
Field random_ball_union(const GridSpec& grid, std::mt19937_64& rng, int balls = 3);
Field random_translated_ball(const GridSpec& grid, std::mt19937_64& rng);
Field random_ellipse(const GridSpec& grid, std::mt19937_64& rng);
/// One of the four families above, picked uniformly; never empty.
Field random_indicator(const GridSpec& grid, std::mt19937_64& rng);

/// A random trigonometric polynomial of low frequency times the C^2 cutoff
/// (1 - |x - c|^2 / R^2)_+^3; `nonnegative` squares the polynomial.
Field random_smooth_field(const GridSpec& grid, std::mt19937_64& rng, bool nonnegative = false);

/// Nested random sets carrying `levels` distinct nonzero values.
Field random_piecewise_constant(const GridSpec& grid, std::mt19937_64& rng, int levels = 3);

/// Smooth field cut off outside a random ball.
Field random_compact_field(const GridSpec& grid, std::mt19937_64& rng);

}  // namespace nlperim
