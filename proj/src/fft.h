#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace mirflex::detail {

/// Real-to-complex FFT of a fixed size backed by FFTW. Not thread-safe per
/// instance; create one per worker. Plan creation is serialized internally.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  std::span<double> input() noexcept { return {in_, n_}; }
  std::span<std::complex<double>> spectrum() noexcept;

  /// input() -> spectrum(), n/2 + 1 bins.
  void forward();
  /// spectrum() -> input(), unnormalized (scaled by n). Clobbers spectrum().
  void inverse();

 private:
  std::size_t n_;
  double* in_;
  void* out_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace mirflex::detail
