#include "avsync/commands.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <regex>
#include <thread>

#include "avsync/avs.h"
#include "avsync/error.h"
#include "avsync/generate.h"
#include "avsync/genre.h"
#include "avsync/image.h"
#include "avsync/process.h"
#include "avsync/util.h"
#include "avsync/video_io.h"

namespace avsync {

namespace {

using nlohmann::json;

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results are stored by
// index, so output order never depends on scheduling.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, unsigned threads, Fn fn) {
  std::vector<T> out(n);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) out[i] = fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<double> column_sums(const Eigen::MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m.col(c).sum();
  return out;
}

GenreLexicon lexicon_for(const Config& config) {
  return config.lexicon_path.empty() ? GenreLexicon::builtin() : GenreLexicon::load(config.lexicon_path);
}

std::vector<SegmentAnalysis> analyze_all(const std::vector<Segment>& segments, const Config& config) {
  const auto params = config.energy_params();
  return parallel_map<SegmentAnalysis>(segments.size(), config.threads,
                                       [&](std::size_t i) { return analyze_segment(segments[i].buffer, params); });
}

FrameSchedule schedule_for(const Segment& seg, const SegmentAnalysis* analysis, const Config& config) {
  if (config.schedule == ScheduleSource::kLinear || analysis == nullptr) {
    return linear_schedule(config.fps, seg.duration_s, seg.index);
  }
  return frame_schedule(analysis->energy, config.fps, seg.duration_s, seg.index);
}

json segment_header(const Segment& seg) {
  return {{"index", seg.index}, {"start_s", seg.start_s}, {"duration_s", seg.duration_s}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw InputError("failed writing " + path.string());
}

void remove_frame_files(const std::filesystem::path& dir) {
  static const std::regex pattern(R"(frame_\d{6}\.png)");
  if (!std::filesystem::is_directory(dir)) return;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (std::regex_match(entry.path().filename().string(), pattern)) std::filesystem::remove(entry.path());
  }
}

json event_json(const EventSeries& series) { return series.timestamps_s; }

}  // namespace

AudioBuffer load_analysis_audio(const std::filesystem::path& path, const Config& config) {
  return resample(read_wav(path), config.analysis_rate);
}

json analyze_report(const AudioBuffer& audio, const Config& config) {
  validate(config);
  const auto segments = segment(audio, config.segment_length_s);
  const auto analyses = analyze_all(segments, config);
  const int rate = audio.sample_rate;
  const double fmax = config.spectral.fmax > 0.0 ? config.spectral.fmax : rate / 2.0;
  const auto fb = mel_filterbank(config.spectral.n_mels, config.spectral.n_fft, rate, config.spectral.fmin, fmax);

  json out = json::array();
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& a = analyses[i];
    const auto mel = mel_spectrogram(a.spec, fb, true);
    std::vector<double> band_mean(static_cast<std::size_t>(mel.bands.rows()));
    for (Eigen::Index b = 0; b < mel.bands.rows(); ++b) band_mean[static_cast<std::size_t>(b)] = mel.bands.row(b).mean();

    auto seg = segment_header(segments[i]);
    seg["frame_times_s"] = a.energy.frame_times_s;
    seg["harmonic"] = column_sums(a.mel_harmonic.bands);
    seg["percussive"] = column_sums(a.mel_percussive.bands);
    seg["raw_energy"] = a.raw_energy;
    seg["energy"] = {{"values", a.energy.values},
                     {"fallback", a.energy.fallback},
                     {"weights", {{"percussive", a.energy.weights.percussive}, {"harmonic", a.energy.weights.harmonic}}}};
    seg["mel"] = {{"n_mels", mel.bands.rows()},
                  {"n_frames", mel.bands.cols()},
                  {"normalized", mel.normalized},
                  {"band_mean", band_mean},
                  {"center_hz", mel_center_frequencies(config.spectral.n_mels, config.spectral.fmin, fmax)}};
    out.push_back(std::move(seg));
  }
  return {{"sample_rate", rate}, {"duration_s", audio.duration_s()}, {"segments", out}};
}

std::vector<std::filesystem::path> write_analysis_files(const json& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& seg : report.at("segments")) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "segment_%03zu", seg.at("index").get<std::size_t>());
    const auto json_path = out_dir / (std::string(stem) + ".json");
    write_json(json_path, seg);
    written.push_back(json_path);

    const auto csv_path = out_dir / (std::string(stem) + ".csv");
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw InputError("cannot write " + csv_path.string());
    csv.precision(17);
    csv << "time_s,harmonic,percussive,raw_energy,energy\n";
    const auto& times = seg.at("frame_times_s");
    for (std::size_t k = 0; k < times.size(); ++k) {
      csv << times[k].get<double>() << ',' << seg["harmonic"][k].get<double>() << ','
          << seg["percussive"][k].get<double>() << ',' << seg["raw_energy"][k].get<double>() << ','
          << seg["energy"]["values"][k].get<double>() << '\n';
    }
    written.push_back(csv_path);
  }
  return written;
}

json energy_report(const AudioBuffer& audio, const Config& config) {
  validate(config);
  const auto segments = segment(audio, config.segment_length_s);
  const auto analyses = analyze_all(segments, config);
  json out = json::array();
  for (std::size_t i = 0; i < segments.size(); ++i) {
    auto seg = segment_header(segments[i]);
    seg["frame_times_s"] = analyses[i].energy.frame_times_s;
    seg["values"] = analyses[i].energy.values;
    seg["fallback"] = analyses[i].energy.fallback;
    out.push_back(std::move(seg));
  }
  return {{"segments", out}};
}

json schedule_report(const AudioBuffer& audio, const Config& config) {
  validate(config);
  const auto segments = segment(audio, config.segment_length_s);
  std::vector<SegmentAnalysis> analyses;
  if (config.schedule == ScheduleSource::kEnergy) analyses = analyze_all(segments, config);
  json out = json::array();
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto sched = schedule_for(segments[i], analyses.empty() ? nullptr : &analyses[i], config);
    auto seg = segment_header(segments[i]);
    seg["fps"] = sched.fps;
    seg["source"] = to_string(sched.source);
    seg["fallback"] = sched.fallback;
    seg["ts"] = sched.ts;
    out.push_back(std::move(seg));
  }
  return {{"segments", out}};
}

json genres_report(const Config& config) {
  const auto lex = lexicon_for(config);
  json genres = json::array();
  for (const auto& label : lex.labels()) genres.push_back({{"label", label}, {"style", lex.style(label)}});
  json aliases = json::object();
  for (const auto& [alias, label] : lex.aliases()) aliases[alias] = label;
  return {{"genres", genres}, {"aliases", aliases}};
}

json run_render(const RenderRequest& request, const Config& config) {
  validate(config);
  namespace fs = std::filesystem;
  fs::create_directories(request.out_dir);
  const auto manifest_path = request.out_dir / "manifest.json";
  FrameStore store{request.out_dir / "frames", config.fps, 0};

  json manifest = {{"status", "running"},
                   {"config", config},
                   {"config_hash", config_hash(config)},
                   {"inputs", {{"audio", {{"path", request.audio.string()}}},
                               {"seed_image", {{"path", request.seed_image.string()}}}}},
                   {"frames_dir", store.directory.string()},
                   {"segments", json::array()}};
  auto flush = [&] { write_json(manifest_path, manifest); };

  try {
    manifest["inputs"]["audio"]["hash"] = file_hash(request.audio);
    manifest["inputs"]["seed_image"]["hash"] = file_hash(request.seed_image);
    const auto audio = load_analysis_audio(request.audio, config);
    const auto seed = read_png(request.seed_image);
    const auto segments = segment(audio, config.segment_length_s);
    const auto lex = lexicon_for(config);

    // Captions and genre decisions.
    std::vector<std::string> per_segment(segments.size(), kUnknownGenre);
    json captions_info;
    if (request.genre) {
      std::fill(per_segment.begin(), per_segment.end(), *request.genre);
      captions_info = {{"source", "flag"}, {"genre", *request.genre}};
    } else if (request.captions_file) {
      const auto captions = read_caption_file(*request.captions_file, segments);
      for (std::size_t i = 0; i < captions.size(); ++i) per_segment[i] = classify_caption(captions[i].text, lex);
      captions_info = {{"source", "file"},
                       {"path", request.captions_file->string()},
                       {"hash", file_hash(*request.captions_file)}};
    } else if (!request.caption_command.empty()) {
      const auto captions = run_captioner(request.caption_command, segments, request.out_dir / "captions");
      const auto path = request.out_dir / "captions.jsonl";
      write_caption_file(path, captions);
      for (std::size_t i = 0; i < captions.size(); ++i) per_segment[i] = classify_caption(captions[i].text, lex);
      captions_info = {{"source", "command"},
                       {"command", join_command(request.caption_command)},
                       {"path", path.string()},
                       {"hash", file_hash(path)}};
    } else {
      captions_info = {{"source", "none"}};
    }
    manifest["inputs"]["captions"] = captions_info;

    const std::string track = track_genre(per_segment);
    const auto track_context = make_prompt_context(track, lex, config.image_weight);
    manifest["genre"] = {{"scope", config.genre_scope == GenreScope::kTrack ? "track" : "segment"},
                         {"track", track},
                         {"per_segment", per_segment}};
    manifest["style_free"] = track_context.style_free;
    manifest["prompt"] = {{"genre", track_context.genre},
                          {"style_text", track_context.style_text},
                          {"image_weight", track_context.image_weight},
                          {"text_weight", track_context.text_weight}};

    std::unique_ptr<GeneratorBackend> backend;
    if (config.backend == "external") {
      backend = external_backend(split_command(config.backend_command),
                                 std::chrono::milliseconds(config.backend_timeout_ms));
    } else {
      backend = crossfade_backend();
    }
    manifest["backend"] = backend->id();
    flush();

    // Key images, one list per distinct prompt context.
    std::map<std::string, std::vector<Image>> key_sets;
    auto context_for = [&](std::size_t i) {
      return config.genre_scope == GenreScope::kTrack ? track_context
                                                      : make_prompt_context(per_segment[i], lex, config.image_weight);
    };
    auto key_image = [&](std::size_t i) -> const Image& {
      const auto ctx = context_for(i);
      const std::string k = ctx.style_free ? std::string() : ctx.genre;
      auto it = key_sets.find(k);
      if (it == key_sets.end()) {
        it = key_sets.emplace(k, generate_key_images(seed, ctx, segments.size(), *backend)).first;
      }
      return it->second[i];
    };

    std::vector<SegmentAnalysis> analyses;
    if (config.schedule == ScheduleSource::kEnergy) analyses = analyze_all(segments, config);

    if (request.overwrite) remove_frame_files(store.directory);
    const RenderOptions options{config.interpolation, config.threads};
    std::size_t next_frame = 0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& seg = segments[i];
      const auto sched = schedule_for(seg, analyses.empty() ? nullptr : &analyses[i], config);
      const Image& end = key_image(i);
      const Image& start = (config.chain == KeyImageChain::kChain && i > 0) ? key_image(i - 1) : seed;
      std::vector<Image> frames;
      try {
        frames = render_segment(start, end, sched, *backend, options);
      } catch (const BackendError& e) {
        throw BackendError("segment " + std::to_string(i) + ": " + e.what());
      }
      write_frames(frames, store, request.overwrite, next_frame);

      const auto ctx = context_for(i);
      manifest["segments"].push_back(
          {{"segment", i},
           {"start_s", seg.start_s},
           {"duration_s", seg.duration_s},
           {"genre", ctx.genre},
           {"style_free", ctx.style_free},
           {"first_frame", next_frame},
           {"frames", frames.size()},
           {"schedule_source", to_string(sched.source)},
           {"fallback_flags",
            {{"energy_fallback", sched.fallback},
             {"zero_padded", seg.buffer.size() < static_cast<std::size_t>(config.spectral.n_fft)},
             {"style_free", ctx.style_free}}}});
      next_frame += frames.size();
      manifest["total_frames"] = next_frame;
      flush();
    }
    store.count = next_frame;

    if (request.video_out) {
      mux(store, request.audio, *request.video_out, config.encoder_template);
      manifest["video"] = request.video_out->string();
    }
    manifest["status"] = "complete";
    flush();
    return manifest;
  } catch (const std::exception& e) {
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    try {
      flush();
    } catch (const std::exception&) {
      // keep the original error
    }
    throw;
  }
}

json evaluate_report(const AudioBuffer& audio, const std::filesystem::path& frames_dir, const Config& config) {
  validate(config);
  FrameStore store{frames_dir, config.fps, 0};
  FrameDiffer differ;
  for_each_frame(store, [&](std::size_t, const Image& img) { differ.push(img); });
  if (differ.frames_seen() < 2) throw InputError("evaluate: need at least 2 frames in " + frames_dir.string());

  const double audio_s = audio.duration_s();
  const double frames_s = static_cast<double>(differ.frames_seen()) / config.fps;
  const double overlap_s = std::min(audio_s, frames_s);
  json warnings = json::array();
  if (std::abs(audio_s - frames_s) > 1.0 / config.fps) {
    warnings.push_back("duration mismatch: audio " + std::to_string(audio_s) + " s, frames " +
                       std::to_string(frames_s) + " s; evaluating the first " + std::to_string(overlap_s) + " s");
  }

  const auto env = onset_envelope(audio, config.spectral);
  auto audio_ev = audio_events(env, config.avs.audio_threshold, config.avs.audio_min_gap_s);
  std::erase_if(audio_ev.timestamps_s, [&](double t) { return t > overlap_s + 1e-9; });

  std::vector<double> diffs = differ.diffs();
  std::size_t keep = 0;
  while (keep < diffs.size() && static_cast<double>(keep + 1) / config.fps <= overlap_s + 1e-9) ++keep;
  diffs.resize(keep);
  const auto visual = visual_events(diffs, config.fps, config.avs.visual_threshold, config.avs.visual_min_gap_s);
  const auto report = avs_score(audio_ev, visual.events, visual.stats, config.avs);

  return {{"score", report.score},
          {"consistency", report.consistency},
          {"penalty", report.penalty},
          {"dtw_cost", report.dtw_cost},
          {"audio_events", event_json(report.audio_events)},
          {"visual_events", event_json(report.visual_events)},
          {"slopes", report.stats.slopes},
          {"frame_diffs", diffs},
          {"mean_slope", report.stats.mean_slope},
          {"frames", differ.frames_seen()},
          {"fps", config.fps},
          {"audio_duration_s", audio_s},
          {"frames_duration_s", frames_s},
          {"evaluated_s", overlap_s},
          {"warnings", warnings},
          {"params",
           {{"audio_threshold", config.avs.audio_threshold},
            {"visual_threshold", config.avs.visual_threshold},
            {"audio_min_gap_s", config.avs.audio_min_gap_s},
            {"visual_min_gap_s", config.avs.visual_min_gap_s},
            {"radius", config.avs.radius},
            {"penalty_scale", config.avs.penalty_scale}}}};
}

json compare_report(const AudioBuffer& audio, const std::filesystem::path& frames_a,
                    const std::filesystem::path& frames_b, const Config& config) {
  auto a = evaluate_report(audio, frames_a, config);
  auto b = evaluate_report(audio, frames_b, config);
  const double diff = a["score"].get<double>() - b["score"].get<double>();
  return {{"a", {{"frames_dir", frames_a.string()}, {"report", a}}},
          {"b", {{"frames_dir", frames_b.string()}, {"report", b}}},
          {"score_difference", diff}};
}

}  // namespace avsync
