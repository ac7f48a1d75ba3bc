#include <cmath>

#include "avsync/error.h"
#include "avsync/generate.h"
#include "doctest.h"
#include "support.h"

using namespace avsync;

namespace {

double norm(const Latent& l) {
  double s = 0.0;
  for (double v : l.values) s += v * v;
  return std::sqrt(s);
}

Latent random_unit(std::mt19937_64& rng, std::size_t n) {
  Latent l{support::random_sequence(rng, n), "test"};
  const double k = norm(l);
  for (auto& v : l.values) v /= k;
  return l;
}

FrameSchedule schedule_of(std::vector<double> ts) {
  FrameSchedule s;
  s.ts = std::move(ts);
  return s;
}

// Backend whose decode fails from a given frame on, identified by the
// interpolation value it receives.
class FailingBackend : public CrossfadeBackend {
 public:
  Image decode(const Latent& latent, int w, int h) override {
    if (++calls_ > 2) throw BackendError("decoder exploded");
    return CrossfadeBackend::decode(latent, w, h);
  }
  bool concurrent() const override { return false; }

 private:
  int calls_ = 0;
};

}  // namespace

TEST_CASE("slerp examples") {
  const Latent a{{1.0, 0.0}, "c"};
  const Latent b{{0.0, 1.0}, "c"};
  CHECK(slerp(a, b, 0.0).values == a.values);
  CHECK(slerp(a, b, 1.0).values == b.values);
  const auto mid = slerp(a, b, 0.5);
  CHECK(mid.values[0] == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
  CHECK(mid.values[1] == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
  CHECK(std::abs(norm(mid) - 1.0) <= 1e-9);

  const Latent p{{1.0, 2.0, 3.0}, "c"};
  const Latent q{{2.0, 4.0, 6.0}, "c"};
  const auto par = slerp(p, q, 0.25);
  const auto lin = lerp(p, q, 0.25);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::isfinite(par.values[i]));
    CHECK(par.values[i] == doctest::Approx(lin.values[i]));
  }
}

TEST_CASE("slerp degenerate inputs") {
  const Latent zero{{0.0, 0.0}, "c"};
  const Latent a{{1.0, 0.0}, "c"};
  const Latent anti{{-1.0, 0.0}, "c"};
  CHECK_THROWS_AS(slerp(zero, zero, 0.5), std::invalid_argument);
  CHECK(slerp(zero, a, 0.5).values == lerp(zero, a, 0.5).values);
  const auto opposite = slerp(a, anti, 0.5);
  for (double v : opposite.values) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(slerp(a, Latent{{1.0, 0.0, 0.0}, "c"}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(slerp(a, Latent{{1.0, 0.0}, "other"}, 0.5), std::invalid_argument);
}

TEST_CASE("property: slerp preserves unit norm and is symmetric") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 64;
    const auto a = random_unit(rng, n);
    const auto b = random_unit(rng, n);
    for (int k = 0; k <= 10; ++k) {
      const double t = k / 10.0;
      const auto ab = slerp(a, b, t);
      const auto ba = slerp(b, a, 1.0 - t);
      CHECK(std::abs(norm(ab) - 1.0) <= 1e-6);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ab.values[i] - ba.values[i]) <= 1e-9);
    }
  }
}

TEST_CASE("crossfade backend codec") {
  CrossfadeBackend backend;
  const auto img = support::noise_image(17, 9, 3);
  const auto latent = backend.encode(img);
  CHECK(latent.values.size() == 3u * 17u * 9u);
  for (double v : latent.values) CHECK((v >= 0.0 && v <= 1.0));
  CHECK(backend.decode(latent, 17, 9) == img);
  CHECK_THROWS_AS(backend.decode(latent, 16, 9), BackendError);
}

TEST_CASE("render_segment: black to white midpoint is mid-gray") {
  CrossfadeBackend backend;
  const auto black = support::solid(8, 8, 0, 0, 0);
  const auto white = support::solid(8, 8, 255, 255, 255);
  const auto frames = render_segment(black, white, schedule_of({0.0, 0.5, 1.0}), backend, {Interpolation::kLerp});
  REQUIRE(frames.size() == 3);
  CHECK(frames[0] == black);
  CHECK(frames[2] == white);
  for (auto p : frames[1].pixels) CHECK((p == 127 || p == 128));
}

TEST_CASE("render_segment: linear midpoint is the per-pixel average") {
  CrossfadeBackend backend;
  const auto a = support::noise_image(12, 12, 1);
  const auto b = support::noise_image(12, 12, 2);
  const auto frames = render_segment(a, b, linear_schedule(3.0, 1.0), backend, {Interpolation::kLerp});
  REQUIRE(frames.size() == 3);
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double avg = (a.pixels[i] + b.pixels[i]) / 2.0;
    CHECK(std::abs(frames[1].pixels[i] - avg) <= 1.0);
  }
}

TEST_CASE("render_segment: constant zero schedule repeats the start image") {
  CrossfadeBackend backend;
  const auto a = support::noise_image(10, 6, 4);
  const auto b = support::noise_image(10, 6, 5);
  const auto frames = render_segment(a, b, schedule_of(std::vector<double>(7, 0.0)), backend);
  REQUIRE(frames.size() == 7);
  for (const auto& f : frames) CHECK(f == a);
}

TEST_CASE("property: frame count equals schedule length; lerp frames are monotone per pixel") {
  CrossfadeBackend backend;
  std::mt19937_64 rng(23);
  const auto a = support::noise_image(6, 5, 6);
  const auto b = support::noise_image(6, 5, 7);
  for (int trial = 0; trial < 50; ++trial) {
    auto ts = support::random_sequence(rng, 1 + rng() % 300, 0.0, 1.0);
    std::sort(ts.begin(), ts.end());
    const auto frames =
        render_segment(a, b, schedule_of(ts), backend, {Interpolation::kLerp, 1 + static_cast<unsigned>(trial % 4)});
    REQUIRE(frames.size() == ts.size());
    for (std::size_t j = 1; j < frames.size(); ++j) {
      for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const int step = frames[j].pixels[i] - frames[j - 1].pixels[i];
        const int direction = b.pixels[i] - a.pixels[i];
        CHECK(step * direction >= 0);
        CHECK(frames[j].pixels[i] >= std::min(a.pixels[i], b.pixels[i]));
        CHECK(frames[j].pixels[i] <= std::max(a.pixels[i], b.pixels[i]));
      }
    }
  }
}

TEST_CASE("render_segment: backend failures name the frame") {
  FailingBackend backend;
  const auto a = support::noise_image(4, 4, 1);
  try {
    render_segment(a, a, linear_schedule(30.0, 1.0), backend);
    FAIL("expected a BackendError");
  } catch (const BackendError& e) {
    REQUIRE(e.frame_index().has_value());
    CHECK(*e.frame_index() == 2);
    CHECK(std::string(e.what()).find("frame 2") != std::string::npos);
  }
}

TEST_CASE("render_segment: threaded and serial renders agree") {
  CrossfadeBackend backend;
  const auto a = support::noise_image(20, 20, 8);
  const auto b = support::noise_image(20, 20, 9);
  const auto s = linear_schedule(30.0, 2.0);
  CHECK(render_segment(a, b, s, backend, {Interpolation::kSlerp, 1}) ==
        render_segment(a, b, s, backend, {Interpolation::kSlerp, 4}));
}

TEST_CASE("key images: shape, distinctness, determinism, genre dependence") {
  auto backend = crossfade_backend();
  const auto lex = GenreLexicon::builtin();
  const auto seed = support::smooth_seed(32, 24);
  const auto rock = generate_key_images(seed, make_prompt_context("rock", lex), 3, *backend);
  REQUIRE(rock.size() == 3);
  for (const auto& img : rock) CHECK(img.same_shape(seed));
  CHECK(rock[0] != rock[1]);
  CHECK(rock[1] != rock[2]);
  CHECK(rock[0] != rock[2]);
  CHECK(generate_key_images(seed, make_prompt_context("rock", lex), 3, *backend) == rock);
  const auto classical = generate_key_images(seed, make_prompt_context("classical", lex), 3, *backend);
  CHECK(classical != rock);
  CHECK_THROWS_AS(generate_key_images(seed, make_prompt_context("rock", lex), 0, *backend), std::invalid_argument);
}
