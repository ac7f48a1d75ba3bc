#include <fstream>

#include "avsync/error.h"
#include "avsync/video_io.h"
#include "doctest.h"
#include "support.h"

using namespace avsync;
namespace fs = std::filesystem;

namespace {

// Stand-in encoder: checks its inputs exist, then writes a small output file.
fs::path fake_encoder(const fs::path& dir) {
  const auto script = dir / "fake_encoder.sh";
  std::ofstream(script) << "#!/bin/sh\n"
                           "# usage: fake_encoder.sh FRAMES_DIR AUDIO OUT\n"
                           "[ -f \"$1/frame_000000.png\" ] || { echo 'no frames' >&2; exit 9; }\n"
                           "[ -f \"$2\" ] || { echo 'no audio' >&2; exit 9; }\n"
                           "ls \"$1\" > \"$3\"\n";
  fs::permissions(script, fs::perms::owner_all);
  return script;
}

}  // namespace

TEST_CASE("write_frames naming, empty case and collisions") {
  const auto dir = support::scratch_dir("frames_write");
  FrameStore store{dir / "f", 30.0, 0};
  CHECK(write_frames({}, store) == 0);
  CHECK_FALSE(fs::exists(store.directory));

  std::vector<Image> frames = {support::noise_image(5, 4, 1), support::noise_image(5, 4, 2),
                               support::noise_image(5, 4, 3)};
  CHECK(write_frames(frames, store) == 3);
  for (const char* name : {"frame_000000.png", "frame_000001.png", "frame_000002.png"}) {
    CHECK(fs::exists(store.directory / name));
  }
  CHECK_THROWS_AS(write_frames(frames, store), InputError);
  CHECK(write_frames(frames, store, true) == 3);
  CHECK(read_frames(store) == frames);
  CHECK(store.count == 3);
}

TEST_CASE("property: PNG round trip is pixel exact") {
  const auto dir = support::scratch_dir("frames_png");
  std::mt19937_64 rng(66);
  for (int trial = 0; trial < 20; ++trial) {
    const auto img = support::noise_image(1 + static_cast<int>(rng() % 40), 1 + static_cast<int>(rng() % 40), rng());
    write_png(dir / "x.png", img);
    CHECK(read_png(dir / "x.png") == img);
  }
}

TEST_CASE("read_frames enumerates 300 frames in order") {
  const auto dir = support::scratch_dir("frames_300");
  FrameStore store{dir, 30.0, 0};
  std::vector<Image> frames;
  for (int k = 0; k < 300; ++k) {
    const auto l = static_cast<std::uint8_t>(k % 256);
    frames.push_back(support::solid(2, 2, l, static_cast<std::uint8_t>(k / 256), 0));
  }
  write_frames(frames, store);
  const auto back = read_frames(store);
  CHECK(back == frames);
}

TEST_CASE("read_frames rejects gaps and mixed sizes") {
  const auto dir = support::scratch_dir("frames_bad");
  FrameStore store{dir, 30.0, 0};
  write_frames({support::noise_image(3, 3, 1), support::noise_image(3, 3, 2), support::noise_image(3, 3, 3)}, store);
  fs::remove(dir / "frame_000001.png");
  CHECK_THROWS_AS(read_frames(store), InputError);

  write_png(dir / "frame_000001.png", support::noise_image(4, 3, 2));
  CHECK_THROWS_AS(read_frames(store), InputError);
}

TEST_CASE("expand_template substitutes inside tokens") {
  const auto argv = expand_template("enc -r {fps} -i {frames_dir}/frame_%06d.png {out}",
                                    {{"fps", "30"}, {"frames_dir", "/tmp/a b"}, {"out", "o.mp4"}});
  const std::vector<std::string> expected = {"enc", "-r", "30", "-i", "/tmp/a b/frame_%06d.png", "o.mp4"};
  CHECK(argv == expected);
}

TEST_CASE("mux: empty store, missing encoder, failing encoder, success") {
  const auto dir = support::scratch_dir("mux");
  const auto wav = dir / "a.wav";
  write_wav(wav, support::silence(1.0));
  FrameStore empty{dir / "empty", 30.0, 0};
  CHECK_THROWS_AS(mux(empty, wav, dir / "o.mp4", "true"), InputError);

  FrameStore store{dir / "frames", 30.0, 0};
  write_frames({support::noise_image(4, 4, 1), support::noise_image(4, 4, 2)}, store);
  try {
    mux(store, wav, dir / "o.mp4", "/nonexistent/encoder {out}");
    FAIL("expected EncoderError");
  } catch (const EncoderError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/encoder") != std::string::npos);
  }

  const auto enc = fake_encoder(dir);
  CHECK_THROWS_AS(mux(store, dir / "missing.wav", dir / "o.mp4", enc.string() + " {frames_dir} {audio} {out}"),
                  InputError);
  CHECK_THROWS_AS(mux(store, wav, dir / "o.mp4", "sh -c 'echo boom >&2; exit 1'"), EncoderError);
  CHECK_THROWS_AS(mux(store, wav, dir / "never.mp4", "true"), EncoderError);

  const auto out = mux(store, wav, dir / "o.mp4", enc.string() + " {frames_dir} {audio} {out}");
  CHECK(fs::file_size(out) > 0);
}

TEST_CASE("mux with a real encoder produces the expected duration") {
  if (std::system("command -v ffmpeg >/dev/null 2>&1 && command -v ffprobe >/dev/null 2>&1") != 0) {
    MESSAGE("ffmpeg/ffprobe not installed; skipping container duration check");
    return;
  }
  const auto dir = support::scratch_dir("mux_real");
  const auto wav = dir / "a.wav";
  write_wav(wav, support::sine(440.0, 10.0));
  FrameStore store{dir / "frames", 30.0, 0};
  std::vector<Image> frames;
  for (int k = 0; k < 300; ++k) frames.push_back(support::solid(32, 32, static_cast<std::uint8_t>(k % 256), 0, 0));
  write_frames(frames, store);
  const auto out = mux(store, wav, dir / "o.mp4");
  const auto probe = dir / "probe.txt";
  const std::string cmd = "ffprobe -v error -show_entries format=duration -of csv=p=0 '" + out.string() + "' > '" +
                          probe.string() + "'";
  REQUIRE(std::system(cmd.c_str()) == 0);
  double duration = 0.0;
  std::ifstream(probe) >> duration;
  CHECK(std::abs(duration - 10.0) <= 0.1);
}
