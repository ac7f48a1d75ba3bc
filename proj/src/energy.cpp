#include "avsync/energy.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "avsync/error.h"

namespace avsync {

std::string to_string(ScheduleSource source) {
  return source == ScheduleSource::kEnergy ? "energy" : "linear";
}

std::vector<double> frame_energy(const MelSpectrogram& mel_perc, const MelSpectrogram& mel_harm,
                                 EnergyWeights weights) {
  if (mel_perc.bands.cols() != mel_harm.bands.cols()) {
    throw InputError("frame_energy: percussive has " + std::to_string(mel_perc.bands.cols()) +
                     " frames, harmonic has " + std::to_string(mel_harm.bands.cols()));
  }
  if (weights.percussive < 0.0 || weights.harmonic < 0.0 ||
      (weights.percussive == 0.0 && weights.harmonic == 0.0)) {
    throw std::invalid_argument("frame_energy: weights must be >= 0 and not both zero");
  }
  const Eigen::VectorXd perc = mel_perc.bands.colwise().sum().transpose();
  const Eigen::VectorXd harm = mel_harm.bands.colwise().sum().transpose();
  std::vector<double> e(static_cast<std::size_t>(perc.size()));
  for (Eigen::Index t = 0; t < perc.size(); ++t) {
    e[static_cast<std::size_t>(t)] =
        std::max(0.0, weights.percussive * perc(t) + weights.harmonic * harm(t));
  }
  return e;
}

EnergyVector cumulative_energy(const std::vector<double>& raw, std::vector<double> frame_times_s,
                               EnergyWeights weights) {
  EnergyVector ev;
  ev.weights = weights;
  ev.frame_times_s = std::move(frame_times_s);
  const std::size_t n = raw.size();
  if (n == 0) return ev;
  ev.values.assign(n, 0.0);
  if (n == 1) {
    ev.fallback = true;
    return ev;
  }

  double total = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (raw[i] < 0.0) throw std::invalid_argument("cumulative_energy: raw energy must be nonnegative");
    total += raw[i];
    ev.values[i] = total;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    ev.fallback = true;
    for (std::size_t i = 0; i < n; ++i) ev.values[i] = static_cast<double>(i) / (n - 1);
    return ev;
  }
  for (auto& v : ev.values) v = std::min(1.0, v / total);
  ev.values.back() = 1.0;
  return ev;
}

std::size_t frame_count(double fps, double duration_s) {
  if (!(fps > 0.0)) throw std::invalid_argument("frame_count: fps must be positive");
  if (!(duration_s > 0.0)) throw std::invalid_argument("frame_count: duration must be positive");
  return static_cast<std::size_t>(std::llround(fps * duration_s));
}

FrameSchedule frame_schedule(const EnergyVector& ev, double fps, double duration_s,
                             std::size_t segment_index) {
  const std::size_t n = frame_count(fps, duration_s);
  if (ev.values.empty()) throw InputError("frame_schedule: empty energy vector");
  if (n == 0) throw InputError("frame_schedule: duration shorter than one frame");

  FrameSchedule sched;
  sched.fps = fps;
  sched.segment_index = segment_index;
  sched.source = ScheduleSource::kEnergy;
  sched.fallback = ev.fallback;
  if (n == 1) {
    sched.ts = {1.0};
    return sched;
  }

  const std::size_t m = ev.values.size();
  sched.ts.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = static_cast<double>(j) * static_cast<double>(m - 1) / static_cast<double>(n - 1);
    const auto lo = std::min(static_cast<std::size_t>(x), m - 1);
    const std::size_t hi = std::min(lo + 1, m - 1);
    const double frac = x - static_cast<double>(lo);
    sched.ts[j] = std::clamp(ev.values[lo] + frac * (ev.values[hi] - ev.values[lo]), 0.0, 1.0);
  }
  sched.ts.front() = 0.0;
  sched.ts.back() = 1.0;
  return sched;
}

FrameSchedule linear_schedule(double fps, double duration_s, std::size_t segment_index) {
  const std::size_t n = frame_count(fps, duration_s);
  if (n == 0) throw InputError("linear_schedule: duration shorter than one frame");
  FrameSchedule sched;
  sched.fps = fps;
  sched.segment_index = segment_index;
  sched.source = ScheduleSource::kLinear;
  sched.ts.resize(n, 1.0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    sched.ts[j] = static_cast<double>(j) / static_cast<double>(n - 1);
  }
  return sched;
}

SegmentAnalysis analyze_segment(const AudioBuffer& buf, const EnergyParams& params) {
  AudioBuffer padded = buf;
  const auto n_fft = static_cast<std::size_t>(params.spectral.n_fft);
  if (padded.size() < n_fft) padded.samples.resize(n_fft, 0.0);

  SegmentAnalysis out;
  out.spec = stft(padded, params.spectral.n_fft, params.spectral.hop);
  out.separation = hpss(out.spec, params.hpss);

  const double fmax = params.spectral.fmax > 0.0 ? params.spectral.fmax : padded.sample_rate / 2.0;
  const auto fb = mel_filterbank(params.spectral.n_mels, params.spectral.n_fft, padded.sample_rate,
                                 params.spectral.fmin, fmax);
  const auto times = out.spec.frame_times();
  out.mel_percussive = mel_spectrogram(out.separation.percussive_mag, times, fb, false);
  out.mel_harmonic = mel_spectrogram(out.separation.harmonic_mag, times, fb, false);
  out.raw_energy = frame_energy(out.mel_percussive, out.mel_harmonic, params.weights);
  out.energy = cumulative_energy(out.raw_energy, times, params.weights);
  return out;
}

}  // namespace avsync
