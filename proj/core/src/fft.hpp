#pragma once

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <span>
#include <vector>

namespace seld::detail {

/// Owns a pair of FFTW plans (real-to-complex and back) for one transform size.
/// Plan creation goes through a process-wide lock; execution is reentrant.
class RealFft {
 public:
  explicit RealFft(int size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const noexcept { return n_; }
  int bins() const noexcept { return n_ / 2 + 1; }

  /// in.size() == size(), out.size() == bins().
  void forward(std::span<double> in, std::span<std::complex<double>> out) const;
  /// Unnormalized inverse; in.size() == bins(), out.size() == size(). `in` is clobbered.
  void inverse(std::span<std::complex<double>> in, std::span<double> out) const;

 private:
  int n_;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

std::mutex& fftw_planner_mutex();

}  // namespace seld::detail
