#include "maskx/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <vector>

#include "maskx/error.hpp"

namespace maskx {

namespace {
// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft2D::RealFft2D(int height, int width) : height_(height), width_(width) {
  require(height >= 2 && width >= 2, Errc::invalid_argument, "fft grid too small");
  std::vector<double> real_buf(std::size_t(height) * width);
  std::vector<std::complex<double>> cplx_buf(spectrum_size());

  std::lock_guard<std::mutex> lock(planner_mutex());
  fwd_plan_ = fftw_plan_dft_r2c_2d(height, width, real_buf.data(),
                                   reinterpret_cast<fftw_complex*>(cplx_buf.data()),
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  inv_plan_ = fftw_plan_dft_c2r_2d(height, width,
                                   reinterpret_cast<fftw_complex*>(cplx_buf.data()),
                                   real_buf.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  require(fwd_plan_ != nullptr && inv_plan_ != nullptr, Errc::internal, "fftw planning failed");
}

RealFft2D::~RealFft2D() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_plan_));
}

void RealFft2D::forward(const double* in, std::complex<double>* out) const {
  // r2c out-of-place transforms do not modify the input.
  fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_plan_), const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void RealFft2D::inverse(std::complex<double>* in, double* out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inv_plan_),
                       reinterpret_cast<fftw_complex*>(in), out);
  const double scale = 1.0 / (double(height_) * double(width_));
  const std::size_t n = std::size_t(height_) * width_;
  for (std::size_t i = 0; i < n; ++i) out[i] *= scale;
}

}  // namespace maskx
