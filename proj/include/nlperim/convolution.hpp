#pragma once

#include "nlperim/grid.hpp"
#include "nlperim/kernels.hpp"

namespace nlperim {

/// V(x) = h^N sum_y f(y) K(x - y). Free mode is a zero-padded linear
/// convolution (fields vanish outside the box), periodic mode is circular.
/// When f >= 0 the result is clamped to >= 0 to drop transform round-off;
/// signed inputs keep their signed result.
Field convolve(const Field& f, const KernelTable& kernel);

/// Direct double loop with the same semantics as convolve. Refuses grids with
/// more than 4096 cells.
Field brute_force_convolve(const Field& f, const KernelTable& kernel);

inline constexpr std::size_t kBruteForceLimit = 4096;

}  // namespace nlperim
