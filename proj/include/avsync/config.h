#pragma once

#include <filesystem>
#include <string>

#include "avsync/avs.h"
#include "avsync/energy.h"
#include "avsync/generate.h"
#include "avsync/video_io.h"
#include "json.hpp"

namespace avsync {

enum class GenreScope { kTrack, kSegment };
enum class KeyImageChain { kChain, kFromSeed };

/// Every tunable of the pipeline. Serialises to JSON; flags override values
/// loaded from a file.
struct Config {
  int analysis_rate = kAnalysisRate;
  SpectralParams spectral;
  HpssParams hpss;
  EnergyWeights weights;
  double fps = 30.0;
  double segment_length_s = 10.0;
  double image_weight = 0.70;  // text weight is 1 - image_weight
  AvsParams avs;

  ScheduleSource schedule = ScheduleSource::kEnergy;
  Interpolation interpolation = Interpolation::kSlerp;
  GenreScope genre_scope = GenreScope::kTrack;
  KeyImageChain chain = KeyImageChain::kChain;

  std::string backend = "crossfade";  // "crossfade" or "external"
  std::string backend_command;
  int backend_timeout_ms = 60000;
  unsigned threads = 1;

  std::string lexicon_path;  // empty: builtin lexicon
  std::string encoder_template = kDefaultEncoderTemplate;
  std::string extract_template = kDefaultExtractTemplate;

  double text_weight() const { return 1.0 - image_weight; }
  EnergyParams energy_params() const { return {spectral, hpss, weights}; }
};

/// Throws std::invalid_argument naming the first out-of-range field.
void validate(const Config& config);

void to_json(nlohmann::json& j, const Config& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, Config& c);

Config load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const Config& config);

/// Content hash of the canonical JSON form.
std::string config_hash(const Config& config);

}  // namespace avsync
