#include "avsync/hpss.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "avsync/error.h"

namespace avsync {

namespace {

// Symmetric reflection (d c b a | a b c d | d c b a), valid for any offset.
Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n) {
  const Eigen::Index period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

void median_filter_line(const double* in, Eigen::Index stride, Eigen::Index n, int kernel,
                        double* out, Eigen::Index out_stride, std::vector<double>& scratch) {
  const int half = kernel / 2;
  scratch.resize(static_cast<std::size_t>(kernel));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = -half; k <= half; ++k) {
      scratch[static_cast<std::size_t>(k + half)] = in[reflect_index(i + k, n) * stride];
    }
    auto mid = scratch.begin() + half;
    std::nth_element(scratch.begin(), mid, scratch.end());
    out[i * out_stride] = *mid;
  }
}

void check_kernel(int kernel, const char* name) {
  if (kernel < 3 || kernel % 2 == 0) {
    throw std::invalid_argument(std::string("hpss: ") + name + " must be odd and >= 3");
  }
}

}  // namespace

Eigen::MatrixXd median_filter(const Eigen::MatrixXd& m, int kernel, int axis) {
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("median_filter: kernel must be odd");
  if (axis != 0 && axis != 1) throw std::invalid_argument("median_filter: axis must be 0 or 1");
  Eigen::MatrixXd out(m.rows(), m.cols());
  std::vector<double> scratch;
  // Column-major storage: rows are strided by rows(), columns are contiguous.
  if (axis == 1) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      median_filter_line(m.data() + r, m.rows(), m.cols(), kernel, out.data() + r, out.rows(),
                         scratch);
    }
  } else {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      median_filter_line(m.data() + c * m.rows(), 1, m.rows(), kernel,
                         out.data() + c * out.rows(), 1, scratch);
    }
  }
  return out;
}

HpssResult hpss(const ComplexSpectrogram& spec, const HpssParams& params) {
  check_kernel(params.kernel_harm, "kernel_harm");
  check_kernel(params.kernel_perc, "kernel_perc");
  if (!(params.power > 0.0)) throw std::invalid_argument("hpss: power must be positive");
  if (spec.bins.size() == 0) throw InputError("hpss: empty spectrogram");

  const Eigen::MatrixXd mag = spec.magnitude();
  const Eigen::MatrixXd harm = median_filter(mag, params.kernel_harm, 1);
  const Eigen::MatrixXd perc = median_filter(mag, params.kernel_perc, 0);

  HpssResult out;
  out.harmonic_mask.resize(mag.rows(), mag.cols());
  out.percussive_mask.resize(mag.rows(), mag.cols());
  for (Eigen::Index j = 0; j < mag.cols(); ++j) {
    for (Eigen::Index i = 0; i < mag.rows(); ++i) {
      const double h = harm(i, j);
      const double p = perc(i, j);
      double mh = 0.5;
      if (params.mask == MaskMode::kBinary) {
        if (h > p) mh = 1.0;
        else if (h < p) mh = 0.0;
      } else {
        // Scale before raising to the power to stay clear of underflow.
        const double scale = std::max(h, p);
        if (scale > 0.0) {
          const double hp = std::pow(h / scale, params.power);
          const double pp = std::pow(p / scale, params.power);
          mh = hp / (hp + pp);
        }
      }
      out.harmonic_mask(i, j) = mh;
      out.percussive_mask(i, j) = 1.0 - mh;
    }
  }
  out.harmonic_mag = out.harmonic_mask.cwiseProduct(mag);
  out.percussive_mag = out.percussive_mask.cwiseProduct(mag);
  return out;
}

AudioBuffer component_audio(const ComplexSpectrogram& spec, const Eigen::MatrixXd& mask) {
  if (mask.rows() != spec.n_bins() || mask.cols() != spec.n_frames()) {
    throw std::invalid_argument("component_audio: mask shape does not match spectrogram");
  }
  ComplexSpectrogram masked = spec;
  masked.bins = spec.bins.cwiseProduct(mask.cast<std::complex<double>>());
  return istft(masked);
}

}  // namespace avsync
