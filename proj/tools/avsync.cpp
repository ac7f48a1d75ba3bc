// avsync: audio-driven frame interpolation and synchrony evaluation.
//
// Exit codes: 0 ok, 1 usage, 2 input error, 3 backend or encoder error.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <unistd.h>

#include "CLI11.hpp"
#include "avsync/commands.h"
#include "avsync/config.h"
#include "avsync/error.h"
#include "avsync/process.h"
#include "avsync/video_io.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitBackend = 3;

// Every config field as an optional flag; only flags actually given override
// the config file.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<int> analysis_rate, n_fft, hop, n_mels, kernel_harm, kernel_perc, timeout_ms;
  std::optional<double> fmin, fmax, hpss_power, w_perc, w_harm, fps, segment_length, image_weight;
  std::optional<double> audio_threshold, visual_threshold, audio_min_gap, visual_min_gap, penalty_scale;
  std::optional<std::size_t> radius;
  std::optional<unsigned> threads;
  std::optional<std::string> mask, schedule, interpolation, genre_scope, chain, backend, backend_command;
  std::optional<std::string> lexicon, encoder_template, extract_template;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON config file (flags take precedence)");
    app.add_option("--analysis-rate", analysis_rate, "Analysis sample rate in Hz");
    app.add_option("--n-fft", n_fft, "STFT size");
    app.add_option("--hop", hop, "STFT hop in samples");
    app.add_option("--n-mels", n_mels, "Mel band count");
    app.add_option("--fmin", fmin, "Lowest mel frequency in Hz");
    app.add_option("--fmax", fmax, "Highest mel frequency in Hz (0 = Nyquist)");
    app.add_option("--kernel-harm", kernel_harm, "HPSS time median length in frames");
    app.add_option("--kernel-perc", kernel_perc, "HPSS frequency median length in bins");
    app.add_option("--hpss-power", hpss_power, "Soft mask exponent");
    app.add_option("--mask", mask, "HPSS mask: soft or binary");
    app.add_option("--w-perc", w_perc, "Percussive energy weight");
    app.add_option("--w-harm", w_harm, "Harmonic energy weight");
    app.add_option("--fps", fps, "Video frame rate");
    app.add_option("--segment-length", segment_length, "Segment length in seconds");
    app.add_option("--image-weight", image_weight, "Seed image weight; the prompt gets the rest");
    app.add_option("--audio-threshold", audio_threshold, "Audio event threshold (fraction of max onset)");
    app.add_option("--visual-threshold", visual_threshold, "Visual event threshold (mean gray difference)");
    app.add_option("--audio-min-gap", audio_min_gap, "Minimum seconds between audio events");
    app.add_option("--visual-min-gap", visual_min_gap, "Minimum seconds between visual events");
    app.add_option("--radius", radius, "FastDTW radius");
    app.add_option("--penalty-scale", penalty_scale, "Movement penalty slope scale");
    app.add_option("--schedule", schedule, "Frame schedule: energy or linear");
    app.add_option("--interpolation", interpolation, "Latent interpolation: slerp or lerp");
    app.add_option("--genre-scope", genre_scope, "Genre decided per track or per segment");
    app.add_option("--chain", chain, "Segment start image: chain (previous key) or seed");
    app.add_option("--backend", backend, "Generator backend: crossfade or external");
    app.add_option("--backend-command", backend_command, "Command line of the external backend");
    app.add_option("--backend-timeout-ms", timeout_ms, "Per-call backend timeout");
    app.add_option("--threads", threads, "Worker threads");
    app.add_option("--lexicon", lexicon, "Genre lexicon TSV (label<TAB>style)");
    app.add_option("--encoder-template", encoder_template, "Video encoder command template");
    app.add_option("--extract-template", extract_template, "Frame extraction command template");
  }

  avsync::Config resolve() const {
    avsync::Config c = config_path ? avsync::load_config(*config_path) : avsync::Config{};
    auto set = [](auto& field, const auto& flag) {
      if (flag) field = *flag;
    };
    set(c.analysis_rate, analysis_rate);
    set(c.spectral.n_fft, n_fft);
    set(c.spectral.hop, hop);
    set(c.spectral.n_mels, n_mels);
    set(c.spectral.fmin, fmin);
    set(c.spectral.fmax, fmax);
    set(c.hpss.kernel_harm, kernel_harm);
    set(c.hpss.kernel_perc, kernel_perc);
    set(c.hpss.power, hpss_power);
    set(c.weights.percussive, w_perc);
    set(c.weights.harmonic, w_harm);
    set(c.fps, fps);
    set(c.segment_length_s, segment_length);
    set(c.image_weight, image_weight);
    set(c.avs.audio_threshold, audio_threshold);
    set(c.avs.visual_threshold, visual_threshold);
    set(c.avs.audio_min_gap_s, audio_min_gap);
    set(c.avs.visual_min_gap_s, visual_min_gap);
    set(c.avs.radius, radius);
    set(c.avs.penalty_scale, penalty_scale);
    set(c.backend, backend);
    set(c.backend_command, backend_command);
    set(c.backend_timeout_ms, timeout_ms);
    set(c.threads, threads);
    set(c.lexicon_path, lexicon);
    set(c.encoder_template, encoder_template);
    set(c.extract_template, extract_template);

    // Enumerations go through the JSON reader so they share its validation.
    json choices = json::object();
    if (mask) choices["hpss"] = {{"mask", *mask}};
    if (schedule) choices["schedule"] = *schedule;
    if (interpolation) choices["interpolation"] = *interpolation;
    if (genre_scope) choices["genre_scope"] = *genre_scope;
    if (chain) choices["chain"] = *chain;
    try {
      if (!choices.empty()) {
        json merged = c;
        merged.merge_patch(choices);
        avsync::from_json(merged, c);
      }
    } catch (const avsync::InputError& e) {
      throw std::invalid_argument(e.what());
    }
    avsync::validate(c);
    return c;
  }
};

struct Output {
  std::optional<std::string> path;
  bool to_stdout = false;

  void attach(CLI::App& app, const char* what) {
    app.add_option("--out", path, std::string("Write the ") + what + " JSON to this file");
    app.add_flag("--stdout", to_stdout, "Print the JSON to standard output");
  }

  void emit(const json& j) const {
    if (path) {
      std::ofstream out(*path, std::ios::trunc);
      if (!out) throw avsync::InputError("cannot write " + *path);
      out << j.dump(2) << '\n';
      if (!out) throw avsync::InputError("failed writing " + *path);
    }
    if (to_stdout || !path) std::cout << j.dump(2) << '\n';
  }
};

void print_warnings(const json& report) {
  if (!report.contains("warnings")) return;
  for (const auto& w : report["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Audio-driven frame interpolation and audio-visual synchrony evaluation"};
  app.require_subcommand(1);
  Overrides ov;

  std::string audio;
  std::string out_dir;
  Output out;

  auto* analyze = app.add_subcommand("analyze", "Harmonic/percussive series, mel summary and energy per segment");
  analyze->add_option("audio", audio, "Input WAV")->required();
  analyze->add_option("--out-dir", out_dir, "Write segment_NNN.json/.csv files here");
  bool analyze_stdout = false;
  analyze->add_flag("--stdout", analyze_stdout, "Print the full report to standard output");
  ov.attach(*analyze);

  auto* energy = app.add_subcommand("energy", "Cumulative energy vector per segment");
  energy->add_option("audio", audio, "Input WAV")->required();
  out.attach(*energy, "energy");
  ov.attach(*energy);

  auto* schedule = app.add_subcommand("schedule", "Per-frame interpolation parameters per segment");
  schedule->add_option("audio", audio, "Input WAV")->required();
  out.attach(*schedule, "schedule");
  ov.attach(*schedule);

  avsync::RenderRequest render_req;
  std::string seed, captions, caption_command, genre, video;
  bool overwrite = false;
  auto* render = app.add_subcommand("render", "Render interpolated frames (and optionally a video)");
  render->add_option("audio", audio, "Input WAV")->required();
  render->add_option("seed", seed, "Seed PNG image")->required();
  render->add_option("--out-dir", out_dir, "Output directory for frames/ and manifest.json")->required();
  auto* captions_opt = render->add_option("--captions", captions, "Caption JSONL file, one row per segment");
  auto* command_opt = render->add_option("--caption-command", caption_command, "Captioner run on each segment WAV");
  auto* genre_opt = render->add_option("--genre", genre, "Use this genre instead of captions");
  captions_opt->excludes(command_opt)->excludes(genre_opt);
  command_opt->excludes(genre_opt);
  render->add_option("--video", video, "Mux frames and audio into this file");
  render->add_flag("--overwrite", overwrite, "Replace existing frames");
  bool render_stdout = false;
  render->add_flag("--stdout", render_stdout, "Print the manifest to standard output");
  ov.attach(*render);

  std::string frames_dir;
  auto* evaluate = app.add_subcommand("evaluate", "AVS score of a frame directory or video against audio");
  evaluate->add_option("audio", audio, "Input WAV")->required();
  auto* frames_opt = evaluate->add_option("frames", frames_dir, "Directory of frame_NNNNNN.png");
  auto* video_opt = evaluate->add_option("--video", video, "Decode this video with the extract template");
  frames_opt->excludes(video_opt);
  out.attach(*evaluate, "report");
  ov.attach(*evaluate);

  std::string frames_b;
  auto* compare = app.add_subcommand("compare", "AVS of two frame directories against the same audio");
  compare->add_option("audio", audio, "Input WAV")->required();
  compare->add_option("frames_a", frames_dir, "First frame directory")->required();
  compare->add_option("frames_b", frames_b, "Second frame directory")->required();
  out.attach(*compare, "comparison");
  ov.attach(*compare);

  auto* genres = app.add_subcommand("genres", "List the genre lexicon");
  out.attach(*genres, "lexicon");
  ov.attach(*genres);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const avsync::Config config = ov.resolve();

  if (analyze->parsed()) {
    const auto report = avsync::analyze_report(avsync::load_analysis_audio(audio, config), config);
    if (!out_dir.empty()) {
      for (const auto& p : avsync::write_analysis_files(report, out_dir)) std::cerr << "wrote " << p.string() << '\n';
    }
    if (analyze_stdout || out_dir.empty()) std::cout << report.dump(2) << '\n';
  } else if (energy->parsed()) {
    out.emit(avsync::energy_report(avsync::load_analysis_audio(audio, config), config));
  } else if (schedule->parsed()) {
    out.emit(avsync::schedule_report(avsync::load_analysis_audio(audio, config), config));
  } else if (render->parsed()) {
    render_req.audio = audio;
    render_req.seed_image = seed;
    render_req.out_dir = out_dir;
    render_req.overwrite = overwrite;
    if (!captions.empty()) render_req.captions_file = captions;
    if (!caption_command.empty()) render_req.caption_command = avsync::split_command(caption_command);
    if (!genre.empty()) render_req.genre = genre;
    if (!video.empty()) render_req.video_out = video;
    const auto manifest = avsync::run_render(render_req, config);
    if (render_stdout) {
      std::cout << manifest.dump(2) << '\n';
    } else {
      std::cerr << "rendered " << manifest.value("total_frames", 0) << " frames into "
                << (fs::path(out_dir) / "frames").string() << '\n';
    }
  } else if (evaluate->parsed()) {
    if (frames_dir.empty() && video.empty()) throw std::invalid_argument("evaluate needs a frame directory or --video");
    const auto buf = avsync::load_analysis_audio(audio, config);
    json report;
    if (!video.empty()) {
      const auto tmp = fs::temp_directory_path() / ("avsync_frames_" + std::to_string(::getpid()));
      fs::create_directories(tmp);
      try {
        const auto store = avsync::extract_frames(video, tmp, config.fps, config.extract_template);
        report = avsync::evaluate_report(buf, store.directory, config);
      } catch (...) {
        fs::remove_all(tmp);
        throw;
      }
      fs::remove_all(tmp);
    } else {
      report = avsync::evaluate_report(buf, frames_dir, config);
    }
    print_warnings(report);
    out.emit(report);
  } else if (compare->parsed()) {
    const auto report =
        avsync::compare_report(avsync::load_analysis_audio(audio, config), frames_dir, frames_b, config);
    print_warnings(report["a"]["report"]);
    print_warnings(report["b"]["report"]);
    out.emit(report);
  } else if (genres->parsed()) {
    out.emit(avsync::genres_report(config));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const avsync::BackendError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const avsync::EncoderError& e) {
    std::cerr << "encoder error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const avsync::ProcessError& e) {
    std::cerr << "process error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
}
