#pragma once

#include <complex>
#include <span>
#include <vector>

#include "seld/wav.hpp"

namespace seld {

enum class WindowKind { hann, rectangular };

struct StftParams {
  int frame_len = 480;
  int hop = 240;
  int fft_size = 512;  ///< frames are zero-padded up to this length
  WindowKind window = WindowKind::hann;
};

/// Complex spectrogram indexed (frame, bin).
struct Spectrogram {
  int n_frames = 0;
  int n_bins = 0;
  std::vector<std::complex<double>> bins;

  std::complex<double> at(int t, int f) const { return bins[static_cast<std::size_t>(t) * n_bins + f]; }
};

/// Periodic Hann or rectangular window of the given length.
std::vector<double> make_window(WindowKind kind, int length);

/// T = floor((len - frame_len) / hop) + 1 frames of fft_size/2 + 1 bins.
/// Throws empty_input when the wave is shorter than one frame.
Spectrogram stft(std::span<const float> wave, const StftParams& params);

struct FeatureConfig {
  int sample_rate = 24000;
  int frame_len = 480;
  int hop = 240;
  int fft_size = 512;
  int seg_frames = 127;
  int shift_frames = 120;
  /// Multiplier applied to the amplitude channels.
  double amplitude_scale = 1.0;

  bool operator==(const FeatureConfig&) const = default;
  StftParams stft() const { return {frame_len, hop, fft_size, WindowKind::hann}; }
  int bins() const noexcept { return fft_size / 2 + 1; }
};

/// Values indexed (channel, bin, frame), frame fastest.
struct FeatureTensor {
  int channels = 0;
  int bins = 0;
  int frames = 0;
  std::vector<float> values;

  FeatureTensor() = default;
  FeatureTensor(int m, int f, int t)
      : channels(m), bins(f), frames(t), values(static_cast<std::size_t>(m) * f * t, 0.0f) {}

  float& at(int m, int f, int t) { return values[(static_cast<std::size_t>(m) * bins + f) * frames + t]; }
  float at(int m, int f, int t) const { return values[(static_cast<std::size_t>(m) * bins + f) * frames + t]; }
};

inline constexpr int kFoaChannels = 4;
inline constexpr int kFeatureChannels = 7;

/// Phase of a · conj(ref) in (-pi, pi]; 0 where |ref| < 1e-12.
double phase_difference(std::complex<double> a, std::complex<double> ref) noexcept;

/// Four amplitude channels (W, Y, Z, X) followed by three W-referenced IPDs (Y, Z, X).
FeatureTensor extract_features(const MultichannelWave& wave, const FeatureConfig& config);

/// Overlapping windows of seg_frames with the given shift; the last one is zero-padded.
std::vector<FeatureTensor> segment(const FeatureTensor& features, int seg_frames, int shift_frames);

/// Number of windows segment() produces for `frames` input frames.
int segment_count(int frames, int seg_frames, int shift_frames);

/// Copy of `features` zero-padded (or truncated) to exactly `frames` frames.
FeatureTensor pad_frames(const FeatureTensor& features, int frames);

}  // namespace seld
