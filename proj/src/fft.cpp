#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <utility>

#include "nlperim/error.hpp"

namespace nlperim::detail {

namespace {

// FFTW's planner is not re-entrant; execution with new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (ptr == nullptr) throw NumericalError("fftw_malloc failed");
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  void* ptr;
};

}  // namespace

CubeFft::CubeFft(int dimension, int extent) : dimension_(dimension), extent_(extent) {
  int dims[3] = {extent, extent, extent};
  real_size_ = 1;
  for (int d = 0; d < dimension; ++d) real_size_ *= static_cast<std::size_t>(extent);
  complex_size_ = real_size_ / static_cast<std::size_t>(extent) *
                  static_cast<std::size_t>(extent / 2 + 1);

  FftwBuffer in(sizeof(double) * real_size_);
  FftwBuffer out(sizeof(fftw_complex) * complex_size_);
  std::lock_guard lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_r2c(dimension, dims, static_cast<double*>(in.ptr),
                                    static_cast<fftw_complex*>(out.ptr), FFTW_ESTIMATE);
  inverse_plan_ = fftw_plan_dft_c2r(dimension, dims, static_cast<fftw_complex*>(out.ptr),
                                    static_cast<double*>(in.ptr), FFTW_ESTIMATE);
  if (forward_plan_ == nullptr || inverse_plan_ == nullptr) {
    throw NumericalError("FFTW planning failed");
  }
}

CubeFft::~CubeFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void CubeFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  FftwBuffer a(sizeof(double) * real_size_);
  FftwBuffer b(sizeof(fftw_complex) * complex_size_);
  std::copy(in.begin(), in.end(), static_cast<double*>(a.ptr));
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), static_cast<double*>(a.ptr),
                       static_cast<fftw_complex*>(b.ptr));
  const auto* c = static_cast<const std::complex<double>*>(b.ptr);
  std::copy(c, c + complex_size_, out.begin());
}

void CubeFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
  FftwBuffer a(sizeof(fftw_complex) * complex_size_);
  FftwBuffer b(sizeof(double) * real_size_);
  std::copy(in.begin(), in.end(), static_cast<std::complex<double>*>(a.ptr));
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), static_cast<fftw_complex*>(a.ptr),
                       static_cast<double*>(b.ptr));
  const auto* r = static_cast<const double*>(b.ptr);
  std::copy(r, r + real_size_, out.begin());
}

std::shared_ptr<const CubeFft> cube_fft(int dimension, int extent) {
  static std::mutex cache_mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const CubeFft>> cache;
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[{dimension, extent}];
  if (!slot) slot = std::make_shared<const CubeFft>(dimension, extent);
  return slot;
}

}  // namespace nlperim::detail
