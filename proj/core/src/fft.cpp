#include "fft.hpp"

#include "seld/error.hpp"

namespace seld::detail {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

RealFft::RealFft(int size) : n_(size) {
  if (size < 2) {
    fail(ErrorKind::configuration, "FFT size must be at least 2");
  }
  std::vector<double> re(static_cast<std::size_t>(n_));
  std::vector<std::complex<double>> cx(static_cast<std::size_t>(bins()));
  auto* c = reinterpret_cast<fftw_complex*>(cx.data());
  std::lock_guard lock(fftw_planner_mutex());
  fwd_ = fftw_plan_dft_r2c_1d(n_, re.data(), c, FFTW_ESTIMATE | FFTW_UNALIGNED);
  inv_ = fftw_plan_dft_c2r_1d(n_, c, re.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
}

RealFft::~RealFft() {
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(fwd_);
  fftw_destroy_plan(inv_);
}

void RealFft::forward(std::span<double> in, std::span<std::complex<double>> out) const {
  fftw_execute_dft_r2c(fwd_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<std::complex<double>> in, std::span<double> out) const {
  fftw_execute_dft_c2r(inv_, reinterpret_cast<fftw_complex*>(in.data()), out.data());
}

}  // namespace seld::detail
