#include "avsync/avs.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "avsync/error.h"

namespace avsync {

namespace {

// Earliest-first greedy thinning: keep a candidate only if it is at least
// min_gap_s after the last kept one.
std::vector<std::size_t> thin_by_gap(const std::vector<std::size_t>& candidates,
                                     const std::vector<double>& times, double min_gap_s) {
  std::vector<std::size_t> kept;
  for (std::size_t idx : candidates) {
    if (!kept.empty() && times[idx] - times[kept.back()] < min_gap_s) continue;
    kept.push_back(idx);
  }
  return kept;
}

double ls_slope(std::span<const double> y) {
  const auto n = static_cast<double>(y.size());
  const double mean_x = (n - 1.0) / 2.0;
  double mean_y = 0.0;
  for (double v : y) mean_y += v;
  mean_y /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double dx = static_cast<double>(i) - mean_x;
    sxy += dx * (y[i] - mean_y);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace

void validate(const AvsParams& p) {
  if (!(p.audio_threshold > 0.0 && p.audio_threshold <= 1.0)) {
    throw std::invalid_argument("audio_threshold must be in (0, 1]");
  }
  if (!(p.visual_threshold > 0.0)) throw std::invalid_argument("visual_threshold must be positive");
  if (!(p.audio_min_gap_s >= 0.0) || !(p.visual_min_gap_s >= 0.0)) {
    throw std::invalid_argument("min_gap must be nonnegative");
  }
  if (!(p.penalty_scale > 0.0)) throw std::invalid_argument("penalty_scale must be positive");
}

EventSeries audio_events(const OnsetEnvelope& env, double threshold, double min_gap_s) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("audio_events: threshold must be in (0, 1]");
  }
  if (!(min_gap_s >= 0.0)) throw std::invalid_argument("audio_events: min_gap_s must be >= 0");
  if (env.strength.size() != env.frame_times_s.size()) {
    throw std::invalid_argument("audio_events: strength and frame_times differ in length");
  }
  EventSeries out;
  out.source = EventSource::kAudio;
  const auto& s = env.strength;
  if (s.empty()) return out;
  const double peak = *std::max_element(s.begin(), s.end());
  if (!(peak > 0.0)) return out;
  const double floor = threshold * peak;

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool rises = i == 0 || s[i] > s[i - 1];
    const bool holds = i + 1 == s.size() || s[i] >= s[i + 1];
    if (rises && holds && s[i] >= floor) candidates.push_back(i);
  }
  for (std::size_t idx : thin_by_gap(candidates, env.frame_times_s, min_gap_s)) {
    out.timestamps_s.push_back(env.frame_times_s[idx]);
  }
  return out;
}

std::optional<double> FrameDiffer::push(const Image& frame) {
  validate(frame);
  std::vector<double> gray(frame.pixel_count());
  for (std::size_t p = 0; p < gray.size(); ++p) {
    gray[p] = (frame.pixels[3 * p] + frame.pixels[3 * p + 1] + frame.pixels[3 * p + 2]) / (3.0 * 255.0);
  }
  ++count_;
  if (count_ == 1) {
    width_ = frame.width;
    height_ = frame.height;
    previous_ = std::move(gray);
    return std::nullopt;
  }
  if (frame.width != width_ || frame.height != height_) {
    throw InputError("frame " + std::to_string(count_ - 1) + " is " + std::to_string(frame.width) + "x" +
                     std::to_string(frame.height) + ", expected " + std::to_string(width_) + "x" +
                     std::to_string(height_));
  }
  double acc = 0.0;
  for (std::size_t p = 0; p < gray.size(); ++p) acc += std::abs(gray[p] - previous_[p]);
  previous_ = std::move(gray);
  const double d = acc / static_cast<double>(previous_.size());
  diffs_.push_back(d);
  return d;
}

std::vector<double> frame_diffs(std::span<const Image> frames) {
  if (frames.size() < 2) throw InputError("frame_diffs: need at least 2 frames");
  FrameDiffer differ;
  for (const auto& f : frames) differ.push(f);
  return differ.diffs();
}

VisualEvents visual_events(std::span<const double> diffs, double fps, double threshold,
                           double min_gap_s) {
  if (!(threshold > 0.0)) throw std::invalid_argument("visual_events: threshold must be positive");
  if (!(fps > 0.0)) throw std::invalid_argument("visual_events: fps must be positive");
  if (!(min_gap_s >= 0.0)) throw std::invalid_argument("visual_events: min_gap_s must be >= 0");

  std::vector<double> times(diffs.size());
  std::vector<std::size_t> candidates;
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    times[k] = static_cast<double>(k + 1) / fps;
    if (diffs[k] > threshold) candidates.push_back(k);
  }

  VisualEvents out;
  out.events.source = EventSource::kVisual;
  std::size_t span_start = 0;
  for (std::size_t k : thin_by_gap(candidates, times, min_gap_s)) {
    out.events.timestamps_s.push_back(times[k]);
    if (k + 1 - span_start >= 2) {
      out.stats.slopes.push_back(ls_slope(diffs.subspan(span_start, k + 1 - span_start)));
    }
    span_start = k + 1;
  }
  if (!out.stats.slopes.empty()) {
    double sum = 0.0;
    for (double s : out.stats.slopes) sum += s;
    out.stats.mean_slope = sum / static_cast<double>(out.stats.slopes.size());
  }
  return out;
}

double consistency(double cost, std::size_t n_audio, std::size_t n_visual) {
  if (n_audio == 0 || n_visual == 0) return 0.0;
  const double c = std::exp(-std::max(0.0, cost) / static_cast<double>(std::max(n_audio, n_visual)));
  return std::clamp(c, 0.0, 1.0);
}

double movement_penalty(const TransitionStats& stats, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("movement_penalty: scale must be positive");
  if (!std::isfinite(stats.mean_slope)) return 0.0;
  return std::clamp(1.0 - std::exp(-std::abs(stats.mean_slope) / scale), 0.0, 1.0);
}

AvsReport avs_score(const EventSeries& audio, const EventSeries& visual, const TransitionStats& stats,
                    const AvsParams& params) {
  validate(params);
  AvsReport r;
  r.audio_events = audio;
  r.visual_events = visual;
  r.stats = stats;
  r.params = params;
  if (!audio.empty() && !visual.empty()) {
    r.dtw_cost = dtw_fast(audio.timestamps_s, visual.timestamps_s, params.radius).cost;
  }
  r.consistency = consistency(r.dtw_cost, audio.size(), visual.size());
  r.penalty = movement_penalty(stats, params.penalty_scale);
  r.score = r.consistency * r.penalty;
  return r;
}

}  // namespace avsync
