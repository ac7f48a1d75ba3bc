#include "avsync/spectral.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "avsync/error.h"

namespace avsync {

namespace {

// FFTW planning is not thread safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, out_, in_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(forward_);
      fftw_destroy_plan(inverse_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* real() { return in_; }
  fftw_complex* spectrum() { return out_; }
  void forward() { fftw_execute(forward_); }
  // Unnormalised: result is n times the true inverse.
  void inverse() { fftw_execute(inverse_); }
  int size() const { return n_; }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Slaney mel scale: linear below 1 kHz, logarithmic above.
constexpr double kMelLinearStep = 200.0 / 3.0;
constexpr double kMelLogStartHz = 1000.0;
constexpr double kMelLogStart = kMelLogStartHz / kMelLinearStep;
const double kMelLogStep = std::log(6.4) / 27.0;

}  // namespace

std::vector<double> ComplexSpectrogram::frame_times() const {
  std::vector<double> t(static_cast<std::size_t>(n_frames()));
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = static_cast<double>(k) * hop_s();
  return t;
}

std::vector<double> window_samples(Window window, int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (window == Window::kHann) {
    // Periodic Hann, which satisfies constant overlap-add at hop n/4.
    for (int i = 0; i < n; ++i) {
      w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    }
  }
  return w;
}

ComplexSpectrogram stft(const AudioBuffer& buf, int n_fft, int hop, Window window) {
  if (!is_power_of_two(n_fft)) throw std::invalid_argument("stft: n_fft must be a power of two");
  if (hop <= 0 || hop > n_fft) throw std::invalid_argument("stft: hop must be in (0, n_fft]");
  if (buf.sample_rate <= 0) throw std::invalid_argument("stft: sample_rate must be positive");
  if (buf.size() < static_cast<std::size_t>(n_fft)) {
    throw InputError("stft: buffer of " + std::to_string(buf.size()) +
                     " samples is shorter than one frame (" + std::to_string(n_fft) + ")");
  }

  const auto n = static_cast<long>(buf.size());
  const long half = n_fft / 2;
  const long n_frames = 1 + n / hop;
  const auto win = window_samples(window, n_fft);

  ComplexSpectrogram spec;
  spec.n_fft = n_fft;
  spec.hop = hop;
  spec.sample_rate = buf.sample_rate;
  spec.n_samples = buf.size();
  spec.window = window;
  spec.bins.resize(n_fft / 2 + 1, n_frames);

  RealFft fft(n_fft);
  for (long k = 0; k < n_frames; ++k) {
    const long start = k * hop - half;
    for (long i = 0; i < n_fft; ++i) {
      long idx = start + i;
      if (idx < 0) idx = -idx;
      if (idx >= n) idx = 2 * (n - 1) - idx;
      idx = std::clamp(idx, 0L, n - 1);
      fft.real()[i] = buf.samples[static_cast<std::size_t>(idx)] * win[static_cast<std::size_t>(i)];
    }
    fft.forward();
    for (int b = 0; b <= n_fft / 2; ++b) {
      spec.bins(b, k) = {fft.spectrum()[b][0], fft.spectrum()[b][1]};
    }
  }
  return spec;
}

AudioBuffer istft(const ComplexSpectrogram& spec) {
  const int n_fft = spec.n_fft;
  if (spec.n_bins() != n_fft / 2 + 1) throw std::invalid_argument("istft: bin count mismatch");
  const long half = n_fft / 2;
  const auto n = static_cast<long>(spec.n_samples);
  const auto win = window_samples(spec.window, n_fft);

  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  std::vector<double> norm(static_cast<std::size_t>(n), 0.0);

  RealFft fft(n_fft);
  for (Eigen::Index k = 0; k < spec.n_frames(); ++k) {
    for (int b = 0; b <= n_fft / 2; ++b) {
      fft.spectrum()[b][0] = spec.bins(b, k).real();
      fft.spectrum()[b][1] = spec.bins(b, k).imag();
    }
    fft.inverse();
    const long start = static_cast<long>(k) * spec.hop - half;
    for (long i = 0; i < n_fft; ++i) {
      const long idx = start + i;
      if (idx < 0 || idx >= n) continue;
      const double w = win[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(idx)] += fft.real()[i] / n_fft * w;
      norm[static_cast<std::size_t>(idx)] += w * w;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (norm[i] > 1e-10) out[i] /= norm[i];
  }
  return AudioBuffer{std::move(out), spec.sample_rate};
}

double hz_to_mel(double hz) {
  if (hz < kMelLogStartHz) return hz / kMelLinearStep;
  return kMelLogStart + std::log(hz / kMelLogStartHz) / kMelLogStep;
}

double mel_to_hz(double mel) {
  if (mel < kMelLogStart) return mel * kMelLinearStep;
  return kMelLogStartHz * std::exp(kMelLogStep * (mel - kMelLogStart));
}

std::vector<double> mel_center_frequencies(int n_mels, double fmin, double fmax) {
  const double lo = hz_to_mel(fmin);
  const double hi = hz_to_mel(fmax);
  std::vector<double> centers(static_cast<std::size_t>(n_mels));
  for (int m = 0; m < n_mels; ++m) {
    centers[static_cast<std::size_t>(m)] = mel_to_hz(lo + (hi - lo) * (m + 1) / (n_mels + 1));
  }
  return centers;
}

Eigen::MatrixXd mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax) {
  if (n_mels <= 0) throw std::invalid_argument("mel_filterbank: n_mels must be positive");
  if (n_fft <= 0 || sample_rate <= 0) throw std::invalid_argument("mel_filterbank: bad n_fft or rate");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw std::invalid_argument("mel_filterbank: require 0 <= fmin < fmax <= sample_rate / 2");
  }
  const int n_bins = n_fft / 2 + 1;
  const double lo = hz_to_mel(fmin);
  const double hi = hz_to_mel(fmax);
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[static_cast<std::size_t>(i)] = mel_to_hz(lo + (hi - lo) * i / (n_mels + 1));
  }
  const double bin_hz = static_cast<double>(sample_rate) / n_fft;

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(n_mels, n_bins);
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[static_cast<std::size_t>(m)];
    const double center = edges[static_cast<std::size_t>(m + 1)];
    const double right = edges[static_cast<std::size_t>(m + 2)];
    for (int b = 0; b < n_bins; ++b) {
      const double f = b * bin_hz;
      const double rise = (f - left) / (center - left);
      const double fall = (right - f) / (right - center);
      fb(m, b) = std::max(0.0, std::min(rise, fall));
    }
    // Filters narrower than a bin would otherwise be empty.
    if (fb.row(m).maxCoeff() <= 0.0) {
      const int nearest = std::clamp(static_cast<int>(std::lround(center / bin_hz)), 0, n_bins - 1);
      fb(m, nearest) = 1.0;
    }
  }
  return fb;
}

MelSpectrogram mel_spectrogram(const Eigen::MatrixXd& magnitude, std::vector<double> frame_times,
                               const Eigen::MatrixXd& fb, bool normalize) {
  if (fb.cols() != magnitude.rows()) {
    throw std::invalid_argument("mel_spectrogram: filterbank has " + std::to_string(fb.cols()) +
                                " columns but spectrogram has " + std::to_string(magnitude.rows()) +
                                " bins");
  }
  MelSpectrogram mel;
  mel.bands = fb * magnitude.cwiseAbs2();
  mel.bands = mel.bands.cwiseMax(0.0);
  mel.frame_times_s = std::move(frame_times);
  mel.normalized = normalize;
  if (normalize && mel.bands.size() > 0) {
    const double peak = mel.bands.maxCoeff();
    if (peak > 0.0) mel.bands /= peak;
  }
  return mel;
}

MelSpectrogram mel_spectrogram(const ComplexSpectrogram& spec, const Eigen::MatrixXd& fb,
                               bool normalize) {
  return mel_spectrogram(spec.magnitude(), spec.frame_times(), fb, normalize);
}

OnsetEnvelope onset_strength(const MelSpectrogram& mel) {
  const Eigen::Index frames = mel.bands.cols();
  if (frames < 2) throw InputError("onset_strength: need at least 2 frames");
  const Eigen::Index n_bands = mel.bands.rows();
  const Eigen::MatrixXd logmel = mel.bands.unaryExpr([](double v) { return std::log1p(v); });

  OnsetEnvelope env;
  env.frame_times_s = mel.frame_times_s;
  env.strength.assign(static_cast<std::size_t>(frames), 0.0);
  for (Eigen::Index t = 1; t < frames; ++t) {
    const double flux = (logmel.col(t) - logmel.col(t - 1)).cwiseMax(0.0).sum();
    env.strength[static_cast<std::size_t>(t)] = n_bands > 0 ? flux / static_cast<double>(n_bands) : 0.0;
  }
  return env;
}

OnsetEnvelope onset_envelope(const AudioBuffer& buf, const SpectralParams& params) {
  const auto spec = stft(buf, params.n_fft, params.hop);
  const double fmax = params.fmax > 0.0 ? params.fmax : buf.sample_rate / 2.0;
  const auto fb = mel_filterbank(params.n_mels, params.n_fft, buf.sample_rate, params.fmin, fmax);
  return onset_strength(mel_spectrogram(spec, fb, true));
}

}  // namespace avsync
