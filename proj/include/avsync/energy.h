#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "avsync/audio_io.h"
#include "avsync/hpss.h"
#include "avsync/spectral.h"

namespace avsync {

struct EnergyWeights {
  double percussive = 0.9;
  double harmonic = 0.1;
};

/// Normalised cumulative energy: nondecreasing, starts at 0, ends at 1.
struct EnergyVector {
  std::vector<double> values;
  std::vector<double> frame_times_s;
  EnergyWeights weights;
  bool fallback = false;  // input had no energy; values are a linear ramp
};

enum class ScheduleSource { kEnergy, kLinear };

/// Interpolation parameter t for each output video frame of one segment.
struct FrameSchedule {
  std::vector<double> ts;
  double fps = 30.0;
  std::size_t segment_index = 0;
  ScheduleSource source = ScheduleSource::kEnergy;
  bool fallback = false;
};

std::string to_string(ScheduleSource source);

/// e[t] = w_perc * sum_b perc[b, t] + w_harm * sum_b harm[b, t].
std::vector<double> frame_energy(const MelSpectrogram& mel_perc, const MelSpectrogram& mel_harm,
                                 EnergyWeights weights);

/// values[i] = (c[i] - c[0]) / (c[N-1] - c[0]) for the inclusive prefix sum c.
/// With no energy past the first frame this falls back to i / (N - 1).
EnergyVector cumulative_energy(const std::vector<double>& raw,
                               std::vector<double> frame_times_s = {},
                               EnergyWeights weights = {});

/// Number of video frames covering duration_s at fps.
std::size_t frame_count(double fps, double duration_s);

/// Samples the energy curve at round(fps * duration_s) evenly spaced
/// positions from its first to its last frame, pinning t to 0 and 1 at the
/// ends. A single-frame schedule is {1}.
FrameSchedule frame_schedule(const EnergyVector& ev, double fps, double duration_s,
                             std::size_t segment_index = 0);

/// ts[j] = j / (N - 1), the constant-speed baseline.
FrameSchedule linear_schedule(double fps, double duration_s, std::size_t segment_index = 0);

struct EnergyParams {
  SpectralParams spectral;
  HpssParams hpss;
  EnergyWeights weights;
};

/// Every intermediate of the per-segment energy computation.
struct SegmentAnalysis {
  ComplexSpectrogram spec;
  HpssResult separation;
  MelSpectrogram mel_percussive;
  MelSpectrogram mel_harmonic;
  std::vector<double> raw_energy;
  EnergyVector energy;
};

/// STFT -> HPSS -> component mel power -> weighted energy -> cumulative
/// vector. Buffers shorter than one FFT frame are zero padded.
SegmentAnalysis analyze_segment(const AudioBuffer& buf, const EnergyParams& params = {});

}  // namespace avsync
