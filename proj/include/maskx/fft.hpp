#pragma once

#include <complex>
#include <memory>

namespace maskx {

// Real 2-D FFT bound to a fixed H x W grid (FFTW backed). Spectra use the
// half-plane r2c layout: H rows by W/2+1 columns, row-major.
//
// Plans are created once per instance with FFTW_ESTIMATE (timing-independent,
// so results are reproducible run to run) and FFTW_UNALIGNED (no alignment
// requirement on caller buffers). forward/inverse may be called concurrently
// from multiple threads on distinct buffers.
class RealFft2D {
 public:
  RealFft2D(int height, int width);
  ~RealFft2D();
  RealFft2D(const RealFft2D&) = delete;
  RealFft2D& operator=(const RealFft2D&) = delete;

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int spectrum_cols() const noexcept { return width_ / 2 + 1; }
  std::size_t spectrum_size() const noexcept { return std::size_t(height_) * spectrum_cols(); }

  // Unnormalized DFT. Input is not modified.
  void forward(const double* in, std::complex<double>* out) const;

  // Inverse scaled by 1/(H*W), so inverse(forward(x)) == x. Clobbers `in`.
  void inverse(std::complex<double>* in, double* out) const;

 private:
  int height_;
  int width_;
  void* fwd_plan_;
  void* inv_plan_;
};

}  // namespace maskx
