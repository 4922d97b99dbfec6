#include "seld/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "seld/error.hpp"

namespace seld {
namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  if (offset + sizeof(T) > bytes.size()) {
    fail(ErrorKind::format, "truncated WAV data");
  }
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

bool tag_is(std::span<const std::uint8_t> bytes, std::size_t offset, const char* tag) {
  return offset + 4 <= bytes.size() && std::memcmp(bytes.data() + offset, tag, 4) == 0;
}

}  // namespace

MultichannelWave parse_wav(std::span<const std::uint8_t> bytes) {
  if (!tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE")) {
    fail(ErrorKind::format, "not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, n_channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const auto size = read_le<std::uint32_t>(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (tag_is(bytes, pos, "fmt ")) {
      format = read_le<std::uint16_t>(bytes, body);
      n_channels = read_le<std::uint16_t>(bytes, body + 2);
      rate = read_le<std::uint32_t>(bytes, body + 4);
      bits = read_le<std::uint16_t>(bytes, body + 14);
      if (format == kFormatExtensible) {
        format = read_le<std::uint16_t>(bytes, body + 24);
      }
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      if (!have_fmt) {
        fail(ErrorKind::format, "WAV data chunk precedes fmt chunk");
      }
      if (n_channels == 0) {
        fail(ErrorKind::format, "WAV declares zero channels");
      }
      const bool pcm16 = format == kFormatPcm && bits == 16;
      const bool f32 = format == kFormatFloat && bits == 32;
      if (!pcm16 && !f32) {
        fail(ErrorKind::format, "unsupported WAV encoding (format " + std::to_string(format) + ", " +
                                    std::to_string(bits) + " bits); need 16-bit PCM or 32-bit float");
      }
      const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
      const std::size_t frame_bytes = static_cast<std::size_t>(n_channels) * (bits / 8);
      const std::size_t n = avail / frame_bytes;
      MultichannelWave wave(n_channels, n, static_cast<int>(rate));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < n_channels; ++c) {
          const std::size_t at = body + i * frame_bytes + c * (bits / 8);
          wave.channels[c][i] = pcm16 ? static_cast<float>(read_le<std::int16_t>(bytes, at)) / 32768.0f
                                      : read_le<float>(bytes, at);
        }
      }
      return wave;
    }
    pos = body + size + (size & 1U);
  }
  fail(ErrorKind::format, "WAV file has no data chunk");
}

MultichannelWave read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorKind::io, "cannot open " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const MultichannelWave& wave, WavEncoding encoding) {
  const auto n_ch = static_cast<std::uint16_t>(wave.num_channels());
  const std::size_t n = wave.num_samples();
  const std::uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(n * n_ch * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_le<std::uint32_t>(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, encoding == WavEncoding::pcm16 ? kFormatPcm : kFormatFloat);
  put_le<std::uint16_t>(out, n_ch);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate) * n_ch * (bits / 8));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(n_ch * (bits / 8)));
  put_le<std::uint16_t>(out, bits);
  put_tag(out, "data");
  put_le<std::uint32_t>(out, data_bytes);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < n_ch; ++c) {
      const float v = wave.channels[c][i];
      if (encoding == WavEncoding::pcm16) {
        const double s = std::clamp(std::round(static_cast<double>(v) * 32768.0), -32768.0, 32767.0);
        put_le<std::int16_t>(out, static_cast<std::int16_t>(s));
      } else {
        put_le<float>(out, v);
      }
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const MultichannelWave& wave, WavEncoding encoding) {
  const auto bytes = encode_wav(wave, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail(ErrorKind::io, "cannot write " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    fail(ErrorKind::io, "short write to " + path.string());
  }
}

}  // namespace seld
