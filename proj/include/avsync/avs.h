#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avsync/dtw.h"
#include "avsync/image.h"
#include "avsync/spectral.h"

namespace avsync {

enum class EventSource { kAudio, kVisual };

/// Strictly increasing timestamps in seconds.
struct EventSeries {
  std::vector<double> timestamps_s;
  EventSource source = EventSource::kAudio;

  std::size_t size() const { return timestamps_s.size(); }
  bool empty() const { return timestamps_s.empty(); }
};

/// Least-squares slopes of the frame-difference signal over the span ending
/// at each visual event, in difference units per frame.
struct TransitionStats {
  std::vector<double> slopes;
  double mean_slope = 0.0;  // 0 when there are no slopes
};

struct AvsParams {
  double audio_threshold = 0.3;     // fraction of the onset envelope max
  double visual_threshold = 0.005;  // absolute mean gray difference
  double audio_min_gap_s = 0.25;
  double visual_min_gap_s = 0.25;
  std::size_t radius = kDefaultFastDtwRadius;
  double penalty_scale = 1e-4;
};

/// Throws std::invalid_argument when a parameter is out of range.
void validate(const AvsParams& params);

struct AvsReport {
  EventSeries audio_events;
  EventSeries visual_events;
  TransitionStats stats;
  double dtw_cost = 0.0;
  double consistency = 0.0;
  double penalty = 0.0;
  double score = 0.0;
  AvsParams params;
};

/// Peaks of the envelope at or above threshold * max, thinned so accepted
/// events are at least min_gap_s apart (earliest first).
EventSeries audio_events(const OnsetEnvelope& env, double threshold, double min_gap_s);

/// Mean absolute difference of (R+G+B)/3 in [0, 1] between consecutive
/// frames. Length is frames.size() - 1.
std::vector<double> frame_diffs(std::span<const Image> frames);

/// Incremental form of frame_diffs() holding one frame at a time.
class FrameDiffer {
 public:
  /// Returns the difference to the previous frame, or nothing for the first.
  std::optional<double> push(const Image& frame);
  const std::vector<double>& diffs() const { return diffs_; }
  std::size_t frames_seen() const { return count_; }

 private:
  std::vector<double> previous_;
  int width_ = 0;
  int height_ = 0;
  std::size_t count_ = 0;
  std::vector<double> diffs_;
};

struct VisualEvents {
  EventSeries events;
  TransitionStats stats;
};

/// Pairs with d[k] > threshold are candidates at time (k + 1) / fps, thinned
/// by min_gap_s. For each accepted event the slope of d over the frames since
/// the previous event (exclusive) up to this one is recorded.
VisualEvents visual_events(std::span<const double> diffs, double fps, double threshold,
                           double min_gap_s);

/// exp(-cost / max(n_audio, n_visual)); 0 if either count is zero.
double consistency(double cost, std::size_t n_audio, std::size_t n_visual);

/// 1 - exp(-|mean_slope| / scale).
double movement_penalty(const TransitionStats& stats, double scale);

/// FastDTW between the two timestamp series, then consistency * penalty.
AvsReport avs_score(const EventSeries& audio, const EventSeries& visual, const TransitionStats& stats,
                    const AvsParams& params);

}  // namespace avsync
