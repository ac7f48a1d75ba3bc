#include "avsync/audio_io.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <stdexcept>
#include <string>

#include "avsync/error.h"

namespace avsync {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct WavFormat {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

// Kaiser-windowed sinc kernel; x in input samples, cutoff relative to Nyquist.
double sinc_kernel(double x, double cutoff, double half_width, double beta, double i0_beta) {
  if (std::abs(x) >= half_width) return 0.0;
  const double arg = cutoff * x;
  const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
  const double r = x / half_width;
  const double window = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / i0_beta;
  return cutoff * sinc * window;
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open WAV file: " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw InputError("not a RIFF/WAVE file: " + path.string());
  }

  WavFormat fmt;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::size_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (available < 16) throw InputError("truncated fmt chunk: " + path.string());
      fmt.format = read_u16(chunk + 8);
      fmt.channels = read_u16(chunk + 10);
      fmt.sample_rate = read_u32(chunk + 12);
      fmt.bits = read_u16(chunk + 22);
      if (fmt.format == kFormatExtensible) {
        if (available < 26) throw InputError("truncated extensible fmt chunk: " + path.string());
        fmt.format = read_u16(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = available;
    }
    pos = body + size + (size & 1);
  }

  if (!have_fmt) throw InputError("missing fmt chunk: " + path.string());
  if (data == nullptr) throw InputError("missing data chunk: " + path.string());
  if (fmt.channels == 0 || fmt.sample_rate == 0) {
    throw InputError("invalid channel count or sample rate: " + path.string());
  }
  const bool pcm16 = fmt.format == kFormatPcm && fmt.bits == 16;
  const bool float32 = fmt.format == kFormatFloat && fmt.bits == 32;
  if (!pcm16 && !float32) {
    throw InputError("unsupported WAV encoding (format " + std::to_string(fmt.format) + ", " +
                     std::to_string(fmt.bits) + " bits): " + path.string());
  }

  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t n_frames = data_size / frame_bytes;
  if (n_frames == 0) throw InputError("WAV file contains no audio: " + path.string());

  AudioBuffer buf;
  buf.sample_rate = static_cast<int>(fmt.sample_rate);
  buf.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt.channels; ++c) {
      const std::uint8_t* p = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(p)) / 32768.0;
      } else {
        float f;
        const std::uint32_t raw = read_u32(p);
        std::memcpy(&f, &raw, sizeof f);
        acc += std::isfinite(f) ? static_cast<double>(f) : 0.0;
      }
    }
    buf.samples[i] = std::clamp(acc / fmt.channels, -1.0, 1.0);
  }
  return buf;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buf, WavEncoding encoding) {
  if (buf.sample_rate <= 0) throw std::invalid_argument("write_wav: sample_rate must be positive");
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(buf.size() * (bits / 8));

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate) * (bits / 8));
  put_u16(out, bits / 8);
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_bytes);
  for (double s : buf.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    if (pcm16) {
      const long v = std::lround(clamped * 32768.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(v, -32768L, 32767L))));
    } else {
      const float f = static_cast<float>(clamped);
      std::uint32_t raw;
      std::memcpy(&raw, &f, sizeof raw);
      put_u32(out, raw);
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw InputError("cannot write WAV file: " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw InputError("failed writing WAV file: " + path.string());
}

AudioBuffer resample(const AudioBuffer& buf, int target_rate) {
  if (target_rate <= 0) throw std::invalid_argument("resample: target_rate must be positive");
  if (buf.sample_rate <= 0) throw std::invalid_argument("resample: source sample_rate must be positive");
  if (buf.sample_rate == target_rate) return buf;

  const double ratio = static_cast<double>(target_rate) / buf.sample_rate;
  const std::size_t out_len =
      static_cast<std::size_t>(std::llround(static_cast<double>(buf.size()) * ratio));

  // Lowpass at the lower of the two Nyquist rates, slightly below to leave
  // room for the transition band.
  constexpr double kZeroCrossings = 32.0;
  constexpr double kBeta = 8.6;
  const double cutoff = std::min(1.0, ratio) * 0.97;
  const double half_width = kZeroCrossings / cutoff;
  const double i0_beta = std::cyl_bessel_i(0.0, kBeta);

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  const auto n = static_cast<long>(buf.size());
  for (std::size_t i = 0; i < out_len; ++i) {
    const double center = static_cast<double>(i) / ratio;
    const long lo = std::max(0L, static_cast<long>(std::ceil(center - half_width)));
    const long hi = std::min(n - 1, static_cast<long>(std::floor(center + half_width)));
    double acc = 0.0;
    for (long k = lo; k <= hi; ++k) {
      acc += buf.samples[static_cast<std::size_t>(k)] *
             sinc_kernel(center - static_cast<double>(k), cutoff, half_width, kBeta, i0_beta);
    }
    out.samples[i] = std::clamp(acc, -1.0, 1.0);
  }
  return out;
}

std::vector<Segment> segment(const AudioBuffer& buf, double seg_len_s) {
  if (!(seg_len_s > 0.0)) throw std::invalid_argument("segment: seg_len_s must be positive");
  if (buf.empty()) throw InputError("segment: empty audio buffer");

  const auto seg_samples = static_cast<std::size_t>(std::llround(seg_len_s * buf.sample_rate));
  if (seg_samples == 0) throw std::invalid_argument("segment: seg_len_s shorter than one sample");

  std::vector<Segment> out;
  for (std::size_t start = 0, index = 0; start < buf.size(); start += seg_samples, ++index) {
    const std::size_t end = std::min(buf.size(), start + seg_samples);
    Segment seg;
    seg.index = index;
    seg.start_s = static_cast<double>(start) / buf.sample_rate;
    seg.buffer.sample_rate = buf.sample_rate;
    seg.buffer.samples.assign(buf.samples.begin() + static_cast<long>(start),
                              buf.samples.begin() + static_cast<long>(end));
    seg.duration_s = seg.buffer.duration_s();
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace avsync
