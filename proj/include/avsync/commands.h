#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "avsync/audio_io.h"
#include "avsync/config.h"
#include "json.hpp"

namespace avsync {

/// Reads a WAV and resamples it to the configured analysis rate.
AudioBuffer load_analysis_audio(const std::filesystem::path& path, const Config& config);

/// Harmonic/percussive series, mel summary and energy vector per segment.
nlohmann::json analyze_report(const AudioBuffer& audio, const Config& config);

/// Splits an analysis report into segment_NNN.json plus a segment_NNN.csv of
/// the per-frame series. Returns the files written.
std::vector<std::filesystem::path> write_analysis_files(const nlohmann::json& report,
                                                        const std::filesystem::path& out_dir);

nlohmann::json energy_report(const AudioBuffer& audio, const Config& config);
nlohmann::json schedule_report(const AudioBuffer& audio, const Config& config);

/// The shipped lexicon (or config.lexicon_path) as label/style records.
nlohmann::json genres_report(const Config& config);

struct RenderRequest {
  std::filesystem::path audio;
  std::filesystem::path seed_image;
  std::optional<std::filesystem::path> captions_file;   // JSONL captions
  std::vector<std::string> caption_command;             // runs per segment WAV
  std::optional<std::string> genre;                     // skips captioning
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> video_out;       // mux when set
  bool overwrite = false;
};

/// Full pipeline: captions -> genre -> key images -> schedules -> frames,
/// then mux if requested. Frames go to out_dir/frames and the manifest to
/// out_dir/manifest.json, which is rewritten after every segment and on
/// failure before the error propagates. Returns the final manifest.
nlohmann::json run_render(const RenderRequest& request, const Config& config);

/// AVS of a frame directory against the audio. Durations that disagree by
/// more than one frame produce a warning and the evaluation covers only the
/// overlap.
nlohmann::json evaluate_report(const AudioBuffer& audio, const std::filesystem::path& frames_dir,
                               const Config& config);

/// Evaluates two frame directories against the same audio.
nlohmann::json compare_report(const AudioBuffer& audio, const std::filesystem::path& frames_a,
                              const std::filesystem::path& frames_b, const Config& config);

}  // namespace avsync
