#pragma once

#include <Eigen/Dense>

#include "avsync/audio_io.h"
#include "avsync/spectral.h"

namespace avsync {

enum class MaskMode { kSoft, kBinary };

struct HpssParams {
  int kernel_harm = 31;  // frames, median along time
  int kernel_perc = 31;  // bins, median along frequency
  double power = 2.0;
  MaskMode mask = MaskMode::kSoft;
};

/// Magnitudes and masks share the (bins x frames) shape of the input.
struct HpssResult {
  Eigen::MatrixXd harmonic_mag;
  Eigen::MatrixXd percussive_mag;
  Eigen::MatrixXd harmonic_mask;
  Eigen::MatrixXd percussive_mask;
};

/// Median filter each row (axis 1) or column (axis 0) with a centered odd
/// window and symmetric edge reflection.
Eigen::MatrixXd median_filter(const Eigen::MatrixXd& m, int kernel, int axis);

/// Median-filtering harmonic/percussive separation. Soft masks are
/// H^p / (H^p + P^p); cells where both enhanced spectra vanish get 0.5 / 0.5.
HpssResult hpss(const ComplexSpectrogram& spec, const HpssParams& params = {});

/// Inverse STFT of mask * spec.
AudioBuffer component_audio(const ComplexSpectrogram& spec, const Eigen::MatrixXd& mask);

}  // namespace avsync
