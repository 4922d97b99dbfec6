#include "seld/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "seld/error.hpp"

namespace seld {

std::vector<double> make_window(WindowKind kind, int length) {
  std::vector<double> w(static_cast<std::size_t>(length), 1.0);
  if (kind == WindowKind::hann) {
    for (int n = 0; n < length; ++n) {
      w[static_cast<std::size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
    }
  }
  return w;
}

Spectrogram stft(std::span<const float> wave, const StftParams& p) {
  if (p.hop <= 0 || p.frame_len < p.hop || p.fft_size < p.frame_len) {
    fail(ErrorKind::configuration, "STFT needs fft_size >= frame_len >= hop > 0");
  }
  if (wave.size() < static_cast<std::size_t>(p.frame_len)) {
    fail(ErrorKind::empty_input, "signal of " + std::to_string(wave.size()) + " samples is shorter than one " +
                                     std::to_string(p.frame_len) + "-sample frame");
  }
  // Plans and windows are reused per thread; planning dominates short transforms.
  thread_local std::map<int, std::unique_ptr<detail::RealFft>> plans;
  thread_local std::map<std::pair<int, int>, std::vector<double>> windows;
  auto& plan = plans[p.fft_size];
  if (!plan) plan = std::make_unique<detail::RealFft>(p.fft_size);
  const detail::RealFft& fft = *plan;
  auto& window = windows[{static_cast<int>(p.window), p.frame_len}];
  if (window.empty()) window = make_window(p.window, p.frame_len);
  Spectrogram s;
  s.n_frames = static_cast<int>((wave.size() - p.frame_len) / p.hop) + 1;
  s.n_bins = fft.bins();
  s.bins.resize(static_cast<std::size_t>(s.n_frames) * s.n_bins);
  std::vector<double> frame(static_cast<std::size_t>(p.fft_size), 0.0);
  for (int t = 0; t < s.n_frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * p.hop;
    std::fill(frame.begin(), frame.end(), 0.0);
    for (int n = 0; n < p.frame_len; ++n) {
      frame[n] = window[n] * wave[start + n];
    }
    fft.forward(frame, std::span(s.bins).subspan(static_cast<std::size_t>(t) * s.n_bins, s.n_bins));
  }
  return s;
}

double phase_difference(std::complex<double> a, std::complex<double> ref) noexcept {
  if (std::abs(ref) < 1e-12) {
    return 0.0;
  }
  const double phi = std::arg(a * std::conj(ref));
  return phi <= -std::numbers::pi ? std::numbers::pi : phi;
}

FeatureTensor extract_features(const MultichannelWave& wave, const FeatureConfig& config) {
  if (wave.num_channels() != kFoaChannels) {
    fail(ErrorKind::format, "expected 4 FOA channels, got " + std::to_string(wave.num_channels()));
  }
  if (wave.sample_rate != config.sample_rate) {
    fail(ErrorKind::format, "expected " + std::to_string(config.sample_rate) + " Hz audio, got " +
                                std::to_string(wave.sample_rate) + " Hz");
  }
  const StftParams params = config.stft();
  std::vector<Spectrogram> specs;
  specs.reserve(kFoaChannels);
  for (int c = 0; c < kFoaChannels; ++c) {
    specs.push_back(stft(wave.channel(c), params));
  }
  const int n_frames = specs[0].n_frames;
  const int n_bins = specs[0].n_bins;
  FeatureTensor out(kFeatureChannels, n_bins, n_frames);
  const auto scale = config.amplitude_scale;
  // Blocked over frames so both the (frame, bin) spectra and the (bin, frame) output stay cache resident.
  constexpr int kBlock = 16;
  for (int t0 = 0; t0 < n_frames; t0 += kBlock) {
    const int t1 = std::min(n_frames, t0 + kBlock);
    for (int c = 0; c < kFoaChannels; ++c) {
      for (int f = 0; f < n_bins; ++f) {
        float* amp = &out.at(c, f, 0);
        float* ipd = c == 0 ? nullptr : &out.at(kFoaChannels + c - 1, f, 0);
        for (int t = t0; t < t1; ++t) {
          const auto v = specs[c].at(t, f);
          const double re = v.real(), im = v.imag();
          amp[t] = static_cast<float>(scale * std::sqrt(re * re + im * im));
          if (!ipd) continue;
          // angle(v · conj(ref)), with the same conventions as phase_difference()
          const auto r = specs[0].at(t, f);
          const double rr = r.real(), ri = r.imag();
          float phi = 0.0f;
          if (rr * rr + ri * ri >= 1e-24) {
            phi = std::atan2(static_cast<float>(im * rr - re * ri), static_cast<float>(re * rr + im * ri));
            if (phi <= -std::numbers::pi_v<float>) phi = std::numbers::pi_v<float>;
          }
          ipd[t] = phi;
        }
      }
    }
  }
  return out;
}

int segment_count(int frames, int seg_frames, int shift_frames) {
  if (seg_frames < 1 || shift_frames < 1) {
    fail(ErrorKind::configuration, "segment and shift lengths must be positive");
  }
  if (frames <= seg_frames) {
    return 1;
  }
  return (frames - seg_frames + shift_frames - 1) / shift_frames + 1;
}

FeatureTensor pad_frames(const FeatureTensor& features, int frames) {
  FeatureTensor out(features.channels, features.bins, frames);
  const int keep = std::min(frames, features.frames);
  for (int m = 0; m < features.channels; ++m) {
    for (int f = 0; f < features.bins; ++f) {
      const float* src = &features.values[(static_cast<std::size_t>(m) * features.bins + f) * features.frames];
      std::copy(src, src + keep, &out.at(m, f, 0));
    }
  }
  return out;
}

std::vector<FeatureTensor> segment(const FeatureTensor& features, int seg_frames, int shift_frames) {
  const int count = segment_count(features.frames, seg_frames, shift_frames);
  std::vector<FeatureTensor> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int start = i * shift_frames;
    const int keep = std::max(0, std::min(seg_frames, features.frames - start));
    FeatureTensor seg(features.channels, features.bins, seg_frames);
    for (int m = 0; m < features.channels; ++m) {
      for (int f = 0; f < features.bins; ++f) {
        const float* src = &features.values[(static_cast<std::size_t>(m) * features.bins + f) * features.frames + start];
        std::copy(src, src + keep, &seg.at(m, f, 0));
      }
    }
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace seld
