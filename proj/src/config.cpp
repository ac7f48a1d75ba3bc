#include "avsync/config.h"

#include <fstream>
#include <set>
#include <stdexcept>

#include "avsync/error.h"
#include "avsync/util.h"

namespace avsync {

namespace {

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) throw InputError("unknown config key '" + where + item.key() + "'");
  }
}

}  // namespace

void validate(const Config& c) {
  if (c.analysis_rate <= 0) throw std::invalid_argument("analysis_rate must be positive");
  const auto& s = c.spectral;
  if (s.n_fft <= 0 || (s.n_fft & (s.n_fft - 1)) != 0) throw std::invalid_argument("n_fft must be a power of two");
  if (s.hop <= 0 || s.hop > s.n_fft) throw std::invalid_argument("hop must be in (0, n_fft]");
  if (s.n_mels <= 0) throw std::invalid_argument("n_mels must be positive");
  if (s.fmin < 0.0) throw std::invalid_argument("fmin must be >= 0");
  if (s.fmax > c.analysis_rate / 2.0) throw std::invalid_argument("fmax must not exceed analysis_rate / 2");
  if (s.fmax > 0.0 && s.fmin >= s.fmax) throw std::invalid_argument("fmin must be below fmax");
  for (int k : {c.hpss.kernel_harm, c.hpss.kernel_perc}) {
    if (k < 3 || k % 2 == 0) throw std::invalid_argument("HPSS kernels must be odd and >= 3");
  }
  if (!(c.hpss.power > 0.0)) throw std::invalid_argument("HPSS power must be positive");
  if (c.weights.percussive < 0.0 || c.weights.harmonic < 0.0 ||
      (c.weights.percussive == 0.0 && c.weights.harmonic == 0.0)) {
    throw std::invalid_argument("energy weights must be >= 0 and not both zero");
  }
  if (!(c.fps > 0.0)) throw std::invalid_argument("fps must be positive");
  if (!(c.segment_length_s > 0.0)) throw std::invalid_argument("segment_length_s must be positive");
  if (!(c.image_weight > 0.0 && c.image_weight < 1.0)) throw std::invalid_argument("image_weight must be in (0, 1)");
  validate(c.avs);
  if (c.backend != "crossfade" && c.backend != "external") {
    throw std::invalid_argument("backend must be 'crossfade' or 'external'");
  }
  if (c.backend == "external" && c.backend_command.empty()) {
    throw std::invalid_argument("external backend requires backend_command");
  }
  if (c.backend_timeout_ms <= 0) throw std::invalid_argument("backend_timeout_ms must be positive");
  if (c.threads == 0) throw std::invalid_argument("threads must be >= 1");
}

void to_json(nlohmann::json& j, const Config& c) {
  j = nlohmann::json{
      {"analysis_rate", c.analysis_rate},
      {"spectral", {{"n_fft", c.spectral.n_fft}, {"hop", c.spectral.hop}, {"n_mels", c.spectral.n_mels},
                    {"fmin", c.spectral.fmin}, {"fmax", c.spectral.fmax}}},
      {"hpss", {{"kernel_harm", c.hpss.kernel_harm}, {"kernel_perc", c.hpss.kernel_perc},
                {"power", c.hpss.power}, {"mask", c.hpss.mask == MaskMode::kSoft ? "soft" : "binary"}}},
      {"weights", {{"percussive", c.weights.percussive}, {"harmonic", c.weights.harmonic}}},
      {"fps", c.fps},
      {"segment_length_s", c.segment_length_s},
      {"image_weight", c.image_weight},
      {"avs", {{"audio_threshold", c.avs.audio_threshold}, {"visual_threshold", c.avs.visual_threshold},
               {"audio_min_gap_s", c.avs.audio_min_gap_s}, {"visual_min_gap_s", c.avs.visual_min_gap_s},
               {"radius", c.avs.radius}, {"penalty_scale", c.avs.penalty_scale}}},
      {"schedule", to_string(c.schedule)},
      {"interpolation", c.interpolation == Interpolation::kSlerp ? "slerp" : "lerp"},
      {"genre_scope", c.genre_scope == GenreScope::kTrack ? "track" : "segment"},
      {"chain", c.chain == KeyImageChain::kChain ? "chain" : "seed"},
      {"backend", c.backend},
      {"backend_command", c.backend_command},
      {"backend_timeout_ms", c.backend_timeout_ms},
      {"threads", c.threads},
      {"lexicon_path", c.lexicon_path},
      {"encoder_template", c.encoder_template},
      {"extract_template", c.extract_template},
  };
}

void from_json(const nlohmann::json& j, Config& c) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  reject_unknown(j, {"analysis_rate", "spectral", "hpss", "weights", "fps", "segment_length_s", "image_weight",
                     "avs", "schedule", "interpolation", "genre_scope", "chain", "backend", "backend_command",
                     "backend_timeout_ms", "threads", "lexicon_path", "encoder_template", "extract_template"},
                 "");
  try {
    read_field(j, "analysis_rate", c.analysis_rate);
    if (j.contains("spectral")) {
      const auto& s = j["spectral"];
      reject_unknown(s, {"n_fft", "hop", "n_mels", "fmin", "fmax"}, "spectral.");
      read_field(s, "n_fft", c.spectral.n_fft);
      read_field(s, "hop", c.spectral.hop);
      read_field(s, "n_mels", c.spectral.n_mels);
      read_field(s, "fmin", c.spectral.fmin);
      read_field(s, "fmax", c.spectral.fmax);
    }
    if (j.contains("hpss")) {
      const auto& h = j["hpss"];
      reject_unknown(h, {"kernel_harm", "kernel_perc", "power", "mask"}, "hpss.");
      read_field(h, "kernel_harm", c.hpss.kernel_harm);
      read_field(h, "kernel_perc", c.hpss.kernel_perc);
      read_field(h, "power", c.hpss.power);
      if (h.contains("mask")) {
        const auto m = h["mask"].get<std::string>();
        if (m != "soft" && m != "binary") throw InputError("hpss.mask must be 'soft' or 'binary'");
        c.hpss.mask = m == "soft" ? MaskMode::kSoft : MaskMode::kBinary;
      }
    }
    if (j.contains("weights")) {
      const auto& w = j["weights"];
      reject_unknown(w, {"percussive", "harmonic"}, "weights.");
      read_field(w, "percussive", c.weights.percussive);
      read_field(w, "harmonic", c.weights.harmonic);
    }
    read_field(j, "fps", c.fps);
    read_field(j, "segment_length_s", c.segment_length_s);
    read_field(j, "image_weight", c.image_weight);
    if (j.contains("avs")) {
      const auto& a = j["avs"];
      reject_unknown(a, {"audio_threshold", "visual_threshold", "audio_min_gap_s", "visual_min_gap_s", "radius",
                         "penalty_scale"},
                     "avs.");
      read_field(a, "audio_threshold", c.avs.audio_threshold);
      read_field(a, "visual_threshold", c.avs.visual_threshold);
      read_field(a, "audio_min_gap_s", c.avs.audio_min_gap_s);
      read_field(a, "visual_min_gap_s", c.avs.visual_min_gap_s);
      read_field(a, "radius", c.avs.radius);
      read_field(a, "penalty_scale", c.avs.penalty_scale);
    }
    auto choice = [&](const char* key, const char* a, const char* b) -> std::optional<bool> {
      if (!j.contains(key)) return std::nullopt;
      const auto v = j[key].get<std::string>();
      if (v != a && v != b) throw InputError(std::string(key) + " must be '" + a + "' or '" + b + "'");
      return v == a;
    };
    if (auto v = choice("schedule", "energy", "linear")) c.schedule = *v ? ScheduleSource::kEnergy : ScheduleSource::kLinear;
    if (auto v = choice("interpolation", "slerp", "lerp")) c.interpolation = *v ? Interpolation::kSlerp : Interpolation::kLerp;
    if (auto v = choice("genre_scope", "track", "segment")) c.genre_scope = *v ? GenreScope::kTrack : GenreScope::kSegment;
    if (auto v = choice("chain", "chain", "seed")) c.chain = *v ? KeyImageChain::kChain : KeyImageChain::kFromSeed;
    read_field(j, "backend", c.backend);
    read_field(j, "backend_command", c.backend_command);
    read_field(j, "backend_timeout_ms", c.backend_timeout_ms);
    read_field(j, "threads", c.threads);
    read_field(j, "lexicon_path", c.lexicon_path);
    read_field(j, "encoder_template", c.encoder_template);
    read_field(j, "extract_template", c.extract_template);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("invalid config: ") + e.what());
  }
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  Config c;
  from_json(j, c);
  return c;
}

void save_config(const std::filesystem::path& path, const Config& config) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write config: " + path.string());
  out << nlohmann::json(config).dump(2) << '\n';
}

std::string config_hash(const Config& config) { return content_hash(nlohmann::json(config).dump()); }

}  // namespace avsync
