#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace nlperim::detail {

// Real-to-complex transform over an extent^N cube (FFTW layout: the last axis
// is halved). Instances are immutable and safe to share across threads.
class CubeFft {
 public:
  CubeFft(int dimension, int extent);
  ~CubeFft();
  CubeFft(const CubeFft&) = delete;
  CubeFft& operator=(const CubeFft&) = delete;

  int dimension() const { return dimension_; }
  int extent() const { return extent_; }
  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  // Unnormalized inverse: forward followed by inverse scales by real_size().
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  int dimension_;
  int extent_;
  std::size_t real_size_;
  std::size_t complex_size_;
  void* forward_plan_;
  void* inverse_plan_;
};

// Cached per (dimension, extent).
std::shared_ptr<const CubeFft> cube_fft(int dimension, int extent);

}  // namespace nlperim::detail
