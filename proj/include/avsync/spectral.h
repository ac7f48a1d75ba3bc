#pragma once

#include <Eigen/Dense>
#include <vector>

#include "avsync/audio_io.h"

namespace avsync {

enum class Window { kHann, kRectangular };

/// Centered STFT. Column k is the frame centered on sample k * hop.
struct ComplexSpectrogram {
  Eigen::MatrixXcd bins;  // (n_fft / 2 + 1) x n_frames
  int n_fft = 0;
  int hop = 0;
  int sample_rate = 0;
  std::size_t n_samples = 0;  // length of the analysed signal
  Window window = Window::kHann;

  Eigen::Index n_bins() const { return bins.rows(); }
  Eigen::Index n_frames() const { return bins.cols(); }
  double hop_s() const { return static_cast<double>(hop) / sample_rate; }
  std::vector<double> frame_times() const;
  Eigen::MatrixXd magnitude() const { return bins.cwiseAbs(); }
};

struct MelSpectrogram {
  Eigen::MatrixXd bands;  // n_mels x n_frames
  std::vector<double> frame_times_s;
  bool normalized = false;
};

struct OnsetEnvelope {
  std::vector<double> strength;
  std::vector<double> frame_times_s;
};

struct SpectralParams {
  int n_fft = 2048;
  int hop = 512;
  int n_mels = 128;
  double fmin = 0.0;
  double fmax = 0.0;  // <= 0 means sample_rate / 2
};

std::vector<double> window_samples(Window window, int n);

/// n_fft must be a power of two and 0 < hop <= n_fft. The signal is reflect
/// padded by n_fft / 2 on both sides, giving 1 + n_samples / hop frames.
ComplexSpectrogram stft(const AudioBuffer& buf, int n_fft, int hop, Window window = Window::kHann);

/// Inverse of stft() by weighted overlap-add, normalised by the summed squared
/// window. Output has spec.n_samples samples.
AudioBuffer istft(const ComplexSpectrogram& spec);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Triangular filters (peak 1) with centers equally spaced on the Slaney mel
/// scale. Returns n_mels x (n_fft / 2 + 1).
Eigen::MatrixXd mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax);

/// Center frequency in Hz of every filter in a mel_filterbank() call.
std::vector<double> mel_center_frequencies(int n_mels, double fmin, double fmax);

/// bands = fb * |spec|^2, optionally divided by the global max.
MelSpectrogram mel_spectrogram(const ComplexSpectrogram& spec, const Eigen::MatrixXd& fb,
                               bool normalize);

/// Same as above for a precomputed magnitude spectrogram (e.g. an HPSS component).
MelSpectrogram mel_spectrogram(const Eigen::MatrixXd& magnitude, std::vector<double> frame_times,
                               const Eigen::MatrixXd& fb, bool normalize);

/// Half-wave rectified spectral flux of log(1 + mel), averaged over bands.
/// The first frame has strength 0.
OnsetEnvelope onset_strength(const MelSpectrogram& mel);

/// Convenience: resampled-rate buffer -> normalised mel -> onset envelope.
OnsetEnvelope onset_envelope(const AudioBuffer& buf, const SpectralParams& params = {});

}  // namespace avsync
