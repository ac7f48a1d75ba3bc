#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "avsync/audio_io.h"
#include "avsync/image.h"

namespace support {

inline avsync::AudioBuffer silence(double seconds, int sr = avsync::kAnalysisRate) {
  return {std::vector<double>(static_cast<std::size_t>(std::llround(seconds * sr)), 0.0), sr};
}

inline avsync::AudioBuffer sine(double hz, double seconds, int sr = avsync::kAnalysisRate, double amp = 0.5) {
  auto buf = silence(seconds, sr);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    buf.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / sr);
  }
  return buf;
}

/// Adds a 10 ms exponentially decaying noise burst starting at `at_s`.
inline void add_click(avsync::AudioBuffer& buf, double at_s, double amp = 0.8, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(at_s * 1000.0));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto start = static_cast<std::size_t>(std::llround(at_s * buf.sample_rate));
  const auto len = static_cast<std::size_t>(0.010 * buf.sample_rate);
  const double tau = 0.002 * buf.sample_rate;
  for (std::size_t i = 0; i < len && start + i < buf.size(); ++i) {
    buf.samples[start + i] += amp * std::exp(-static_cast<double>(i) / tau) * u(rng);
  }
}

/// Clicks at first_s, first_s + 1/rate, ... for `seconds` of audio.
inline avsync::AudioBuffer click_train(double rate_hz, double seconds, int sr = avsync::kAnalysisRate,
                                       double first_s = 0.02) {
  auto buf = silence(seconds, sr);
  for (double t = first_s; t < seconds; t += 1.0 / rate_hz) add_click(buf, t);
  return buf;
}

inline double energy(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

inline avsync::Image solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  avsync::Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  }
  return img;
}

inline avsync::Image noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  avsync::Image img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() & 0xFF);
  return img;
}

/// Smooth colour field with large-scale structure, closer to a photograph than
/// per-pixel noise.
inline avsync::Image smooth_seed(int w, int h) {
  avsync::Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) / w;
      const double v = static_cast<double>(y) / h;
      const double c[3] = {0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * (u + 0.3 * v)),
                           0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * (1.3 * v - 0.2 * u) + 1.0),
                           0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * (2.0 * u * v) + 0.5)};
      for (int k = 0; k < 3; ++k) img.at(x, y, k) = static_cast<std::uint8_t>(std::lround(255.0 * c[k]));
    }
  }
  return img;
}

/// Fresh empty directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::path(AVSYNC_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<double> random_sequence(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> out(n);
  for (auto& v : out) v = u(rng);
  return out;
}

}  // namespace support
