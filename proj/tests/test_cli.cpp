#include <algorithm>
#include <fstream>

#include "avsync/audio_io.h"
#include "avsync/genre.h"
#include "avsync/image.h"
#include "avsync/process.h"
#include "avsync/util.h"
#include "avsync/video_io.h"
#include "doctest.h"
#include "json.hpp"
#include "support.h"

using namespace avsync;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ProcessResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), AVSYNC_CLI);
  return run_process(args, "", std::chrono::seconds(120));
}

json cli_json(std::vector<std::string> args) {
  const auto r = cli(std::move(args));
  REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
  return json::parse(r.stdout_text);
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

struct Fixture {
  fs::path dir;
  fs::path clicks;
  fs::path silent;
  fs::path seed;

  explicit Fixture(const std::string& name) : dir(support::scratch_dir(name)) {
    clicks = dir / "clicks.wav";
    silent = dir / "silent.wav";
    seed = dir / "seed.png";
    write_wav(clicks, support::click_train(2.0, 30.0));
    write_wav(silent, support::silence(30.0));
    write_png(seed, support::smooth_seed(32, 24));
  }
};

std::string frames_digest(const fs::path& frames_dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(frames_dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += f.filename().string() + file_hash(f);
  return content_hash(all);
}

}  // namespace

TEST_CASE("genres lists the lexicon") {
  const auto j = cli_json({"genres", "--stdout"});
  CHECK(j["genres"].size() == 23);
  CHECK(j["genres"][10]["label"] == "techno");
}

TEST_CASE("analyze writes one energy file per segment") {
  Fixture fx("cli_analyze");
  const auto r = cli({"analyze", fx.clicks.string(), "--out-dir", (fx.dir / "a").string()});
  REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
  for (int i = 0; i < 3; ++i) {
    const auto seg = read_json(fx.dir / "a" / ("segment_00" + std::to_string(i) + ".json"));
    CHECK(fs::exists(fx.dir / "a" / ("segment_00" + std::to_string(i) + ".csv")));
    const auto values = seg["energy"]["values"].get<std::vector<double>>();
    CHECK(values.front() == 0.0);
    CHECK(values.back() == 1.0);
    std::vector<double> d;
    for (std::size_t k = 1; k < values.size(); ++k) d.push_back(values[k] - values[k - 1]);
    const double max_d = *std::max_element(d.begin(), d.end());
    std::sort(d.begin(), d.end());
    CHECK(max_d >= 3.0 * d[d.size() / 2]);
    CHECK_FALSE(seg["energy"]["fallback"].get<bool>());
    CHECK(seg["mel"]["n_mels"] == 128);
  }
  CHECK_FALSE(fs::exists(fx.dir / "a" / "segment_003.json"));

  const auto silent = cli_json({"analyze", fx.silent.string(), "--stdout"});
  REQUIRE(silent["segments"].size() == 3);
  for (const auto& seg : silent["segments"]) CHECK(seg["energy"]["fallback"].get<bool>());
}

TEST_CASE("schedule reports 300 entries per 10 s segment") {
  Fixture fx("cli_schedule");
  const auto j = cli_json({"schedule", fx.clicks.string(), "--schedule", "linear"});
  REQUIRE(j["segments"].size() == 3);
  const auto ts = j["segments"][1]["ts"].get<std::vector<double>>();
  REQUIRE(ts.size() == 300);
  for (std::size_t k = 0; k < ts.size(); ++k) CHECK(ts[k] == doctest::Approx(k / 299.0));
  CHECK(j["segments"][1]["source"] == "linear");
}

TEST_CASE("render produces 900 frames and a complete manifest") {
  Fixture fx("cli_render");
  const auto out = fx.dir / "r";
  const auto r = cli({"render", fx.clicks.string(), fx.seed.string(), "--out-dir", out.string(), "--genre", "techno",
                      "--threads", "2"});
  REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
  const auto m = read_json(out / "manifest.json");
  CHECK(m["status"] == "complete");
  CHECK(m["total_frames"] == 900);
  CHECK(m["genre"]["track"] == "techno");
  CHECK(m["style_free"] == false);
  CHECK(m["backend"] == "crossfade");
  CHECK(m["inputs"]["audio"]["hash"] == file_hash(fx.clicks));
  CHECK(m["inputs"]["seed_image"]["hash"] == file_hash(fx.seed));
  CHECK(m["config_hash"].get<std::string>().size() == 64);
  REQUIRE(m["segments"].size() == 3);
  for (const auto& seg : m["segments"]) {
    CHECK(seg["frames"] == 300);
    CHECK(seg["schedule_source"] == "energy");
    CHECK(seg["fallback_flags"]["energy_fallback"] == false);
  }
  CHECK(fs::exists(out / "frames" / "frame_000899.png"));
  CHECK_FALSE(fs::exists(out / "frames" / "frame_000900.png"));

  // Same inputs and config: identical frames and manifest.
  const auto again = fx.dir / "r2";
  REQUIRE(cli({"render", fx.clicks.string(), fx.seed.string(), "--out-dir", again.string(), "--genre", "techno"})
              .exit_code == 0);
  CHECK(frames_digest(out / "frames") == frames_digest(again / "frames"));
  auto m2 = read_json(again / "manifest.json");
  m2["frames_dir"] = m["frames_dir"];
  m2["config"]["threads"] = m["config"]["threads"];
  m2["config_hash"] = m["config_hash"];
  CHECK(m2 == m);

  // Rendering into the same directory again needs --overwrite.
  CHECK(cli({"render", fx.clicks.string(), fx.seed.string(), "--out-dir", out.string(), "--genre", "techno"})
            .exit_code == 2);
}

TEST_CASE("render with linear schedule and unknown-genre captions") {
  Fixture fx("cli_render_linear");
  std::ofstream caps(fx.dir / "caps.jsonl");
  for (int i = 0; i < 3; ++i) {
    caps << json{{"index", i}, {"start_s", 10.0 * i}, {"end_s", 10.0 * (i + 1)}, {"text", "wind chimes and birdsong"}}
                .dump()
         << '\n';
  }
  caps.close();
  const auto m = cli_json({"render", fx.clicks.string(), fx.seed.string(), "--out-dir", (fx.dir / "r").string(),
                           "--captions", (fx.dir / "caps.jsonl").string(), "--schedule", "linear", "--stdout"});
  CHECK(m["status"] == "complete");
  CHECK(m["style_free"] == true);
  CHECK(m["genre"]["track"] == kUnknownGenre);
  CHECK(m["inputs"]["captions"]["source"] == "file");
  for (const auto& seg : m["segments"]) CHECK(seg["schedule_source"] == "linear");
}

TEST_CASE("render through the external stub matches the in-process backend") {
  Fixture fx("cli_render_external");
  const auto short_wav = fx.dir / "short.wav";
  write_wav(short_wav, support::click_train(2.0, 2.0));
  const std::vector<std::string> common = {"--genre", "jazz", "--segment-length", "1", "--fps", "10"};
  auto local = std::vector<std::string>{"render", short_wav.string(), fx.seed.string(), "--out-dir",
                                        (fx.dir / "local").string()};
  auto remote = std::vector<std::string>{"render", short_wav.string(), fx.seed.string(), "--out-dir",
                                         (fx.dir / "remote").string(), "--backend", "external", "--backend-command",
                                         AVSYNC_BACKEND_STUB};
  local.insert(local.end(), common.begin(), common.end());
  remote.insert(remote.end(), common.begin(), common.end());
  REQUIRE(cli(local).exit_code == 0);
  const auto r = cli(remote);
  REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
  CHECK(frames_digest(fx.dir / "local" / "frames") == frames_digest(fx.dir / "remote" / "frames"));
}

TEST_CASE("backend failure exits 3 and leaves a failed manifest") {
  Fixture fx("cli_render_fail");
  const auto out = fx.dir / "r";
  const auto r = cli({"render", fx.clicks.string(), fx.seed.string(), "--out-dir", out.string(), "--backend",
                      "external", "--backend-command", std::string(AVSYNC_BACKEND_STUB) + " --fail-op decode"});
  CHECK(r.exit_code == 3);
  CHECK(r.stderr_text.find("frame 0") != std::string::npos);
  const auto m = read_json(out / "manifest.json");
  CHECK(m["status"] == "failed");
  CHECK(m["error"].get<std::string>().find("status 4") != std::string::npos);
  CHECK(m.contains("config_hash"));
}

TEST_CASE("evaluate: static frames score zero, mismatched durations warn") {
  Fixture fx("cli_evaluate");
  FrameStore store{fx.dir / "static", 30.0, 0};
  std::vector<Image> frames(150, support::solid(8, 8, 50, 60, 70));
  write_frames(frames, store);
  const auto r = cli({"evaluate", fx.clicks.string(), store.directory.string(), "--stdout"});
  REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
  const auto j = json::parse(r.stdout_text);
  CHECK(j["score"] == 0.0);
  REQUIRE(j["warnings"].size() == 1);
  CHECK(j["evaluated_s"].get<double>() == doctest::Approx(5.0));
  for (double t : j["audio_events"].get<std::vector<double>>()) CHECK(t <= 5.0);
  CHECK(r.stderr_text.find("warning") != std::string::npos);
}

TEST_CASE("evaluate/compare: energy render beats linear render") {
  Fixture fx("cli_compare");
  REQUIRE(cli({"render", fx.clicks.string(), fx.seed.string(), "--out-dir", (fx.dir / "e").string(), "--genre",
               "techno"})
              .exit_code == 0);
  REQUIRE(cli({"render", fx.clicks.string(), fx.seed.string(), "--out-dir", (fx.dir / "l").string(), "--genre",
               "techno", "--schedule", "linear"})
              .exit_code == 0);
  const auto out_file = fx.dir / "cmp.json";
  const auto r = cli({"compare", fx.clicks.string(), (fx.dir / "e" / "frames").string(),
                      (fx.dir / "l" / "frames").string(), "--out", out_file.string()});
  REQUIRE_MESSAGE(r.exit_code == 0, r.stderr_text);
  const auto j = read_json(out_file);
  CHECK(j["a"]["report"]["score"].get<double>() > j["b"]["report"]["score"].get<double>());
  CHECK(j["score_difference"].get<double>() > 0.0);
}

TEST_CASE("exit codes and flag precedence") {
  Fixture fx("cli_exit");
  CHECK(cli({}).exit_code == 1);
  CHECK(cli({"energy"}).exit_code == 1);
  CHECK(cli({"energy", fx.clicks.string(), "--fps", "-3"}).exit_code == 1);
  CHECK(cli({"energy", (fx.dir / "nope.wav").string()}).exit_code == 2);
  CHECK(cli({"--help"}).exit_code == 0);

  std::ofstream(fx.dir / "cfg.json") << R"({"fps": 12, "segment_length_s": 5})";
  const auto j = cli_json({"schedule", fx.clicks.string(), "--config", (fx.dir / "cfg.json").string(), "--fps", "6"});
  REQUIRE(j["segments"].size() == 6);
  CHECK(j["segments"][0]["ts"].size() == 30);
  CHECK(cli({"schedule", fx.clicks.string(), "--config", (fx.dir / "missing.json").string()}).exit_code == 2);
}
