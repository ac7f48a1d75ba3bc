#pragma once

#include <filesystem>
#include <vector>

namespace avsync {

/// Canonical analysis rate; every analysis stage assumes buffers at this rate.
inline constexpr int kAnalysisRate = 22050;

/// Mono sample sequence in [-1, 1] plus its sample rate.
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kAnalysisRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

/// One fixed-length slice of a track. Segments tile the track in order.
struct Segment {
  std::size_t index = 0;
  double start_s = 0.0;
  double duration_s = 0.0;
  AudioBuffer buffer;
};

enum class WavEncoding { kPcm16, kFloat32 };

/// Reads a PCM16 or float32 RIFF/WAVE file. Channels are averaged to mono and
/// the header sample rate is kept. Throws InputError on unreadable files,
/// unsupported encodings and empty audio.
AudioBuffer read_wav(const std::filesystem::path& path);

void write_wav(const std::filesystem::path& path, const AudioBuffer& buf,
               WavEncoding encoding = WavEncoding::kPcm16);

/// Band-limited (Kaiser-windowed sinc) sample rate conversion. Returns the
/// input unchanged when the rates already match.
AudioBuffer resample(const AudioBuffer& buf, int target_rate);

/// Splits into ceil(duration / seg_len_s) consecutive segments; the last one
/// may be shorter.
std::vector<Segment> segment(const AudioBuffer& buf, double seg_len_s);

}  // namespace avsync
