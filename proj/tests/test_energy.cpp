#include <algorithm>
#include <numeric>

#include "avsync/energy.h"
#include "avsync/error.h"
#include "doctest.h"
#include "support.h"

using namespace avsync;

namespace {

MelSpectrogram mel_of(Eigen::MatrixXd bands) {
  MelSpectrogram m;
  m.bands = std::move(bands);
  m.frame_times_s.resize(static_cast<std::size_t>(m.bands.cols()));
  return m;
}

std::vector<double> increments(const std::vector<double>& ts) {
  std::vector<double> d;
  for (std::size_t i = 1; i < ts.size(); ++i) d.push_back(ts[i] - ts[i - 1]);
  return d;
}

double variance(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size());
}

void check_schedule_invariants(const FrameSchedule& s, std::size_t expected) {
  REQUIRE(s.ts.size() == expected);
  CHECK(s.ts.front() == 0.0);
  CHECK(s.ts.back() == 1.0);
  for (std::size_t i = 1; i < s.ts.size(); ++i) CHECK(s.ts[i] >= s.ts[i - 1]);
}

}  // namespace

TEST_CASE("frame_energy: defaults, zero case and linearity") {
  const EnergyWeights defaults;
  CHECK(defaults.percussive == 0.9);
  CHECK(defaults.harmonic == 0.1);

  Eigen::MatrixXd p(2, 3);
  p << 1, 2, 3, 4, 5, 6;
  Eigen::MatrixXd h(2, 3);
  h << 10, 0, 1, 0, 10, 1;
  const auto e = frame_energy(mel_of(p), mel_of(h), defaults);
  CHECK(e[0] == doctest::Approx(0.9 * 5 + 0.1 * 10));
  CHECK(e[1] == doctest::Approx(0.9 * 7 + 0.1 * 10));
  CHECK(e[2] == doctest::Approx(0.9 * 9 + 0.1 * 2));

  const auto zero = frame_energy(mel_of(Eigen::MatrixXd::Zero(2, 3)), mel_of(h), {1.0, 0.0});
  for (double v : zero) CHECK(v == 0.0);

  const auto doubled = frame_energy(mel_of(p), mel_of(h), {1.8, 0.2});
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(doubled[i] == 2.0 * e[i]);
}

TEST_CASE("cumulative_energy examples") {
  const auto ramp = cumulative_energy(std::vector<double>(11, 3.0));
  CHECK_FALSE(ramp.fallback);
  for (std::size_t i = 0; i < 11; ++i) CHECK(ramp.values[i] == doctest::Approx(i / 10.0).epsilon(1e-12));

  std::vector<double> point(10, 0.0);
  point[4] = 2.5;
  const auto jump = cumulative_energy(point);
  for (std::size_t i = 0; i < 10; ++i) CHECK(jump.values[i] == (i < 4 ? 0.0 : 1.0));

  const auto silent = cumulative_energy(std::vector<double>(5, 0.0));
  CHECK(silent.fallback);
  for (std::size_t i = 0; i < 5; ++i) CHECK(silent.values[i] == doctest::Approx(i / 4.0));
}

TEST_CASE("property: cumulative_energy is monotone, pinned and scale invariant") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 300;
    auto raw = support::random_sequence(rng, n, 0.0, 1.0);
    // Sparse inputs exercise plateaus.
    if (trial % 3 == 0) {
      for (auto& v : raw) v = v > 0.9 ? v : 0.0;
    }
    const auto ev = cumulative_energy(raw);
    CHECK(ev.values.front() == 0.0);
    CHECK(ev.values.back() == 1.0);
    for (std::size_t i = 1; i < n; ++i) CHECK(ev.values[i] >= ev.values[i - 1]);

    const double c = std::exp(static_cast<double>(rng() % 2000) / 100.0 - 10.0);
    auto scaled = raw;
    for (auto& v : scaled) v *= c;
    const auto ev2 = cumulative_energy(scaled);
    CHECK(ev2.fallback == ev.fallback);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ev2.values[i] - ev.values[i]) <= 1e-9);
  }
}

TEST_CASE("frame_schedule: counts and linear ramp") {
  CHECK(frame_count(30.0, 10.0) == 300);
  CHECK(frame_count(30.0, 30.0) == 900);
  const auto ramp = cumulative_energy(std::vector<double>(431, 1.0));
  const auto s = frame_schedule(ramp, 30.0, 10.0, 2);
  check_schedule_invariants(s, 300);
  CHECK(s.segment_index == 2);
  CHECK(s.source == ScheduleSource::kEnergy);
  for (std::size_t j = 0; j < 300; ++j) CHECK(std::abs(s.ts[j] - j / 299.0) <= 1e-9);

  const auto lin = linear_schedule(30.0, 10.0);
  check_schedule_invariants(lin, 300);
  CHECK(lin.source == ScheduleSource::kLinear);
  for (std::size_t j = 0; j < 300; ++j) CHECK(lin.ts[j] == doctest::Approx(j / 299.0));

  CHECK(frame_schedule(ramp, 30.0, 1.0 / 30.0).ts == std::vector<double>{1.0});
  CHECK_THROWS_AS(frame_schedule(ramp, 30.0, 0.001), InputError);
}

TEST_CASE("property: schedules are monotone and pinned for arbitrary energy") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    auto raw = support::random_sequence(rng, 2 + rng() % 500, 0.0, 1.0);
    for (auto& v : raw) v = v * v * v * v;
    const double fps = 1.0 + static_cast<double>(rng() % 60);
    const double dur = 0.5 + static_cast<double>(rng() % 200) / 10.0;
    check_schedule_invariants(frame_schedule(cumulative_energy(raw), fps, dur), frame_count(fps, dur));
  }
}

TEST_CASE("click-track schedule has plateaus and jumps") {
  const auto a = analyze_segment(support::click_train(2.0, 10.0));
  const auto s = frame_schedule(a.energy, 30.0, 10.0);
  REQUIRE(s.ts.size() == 300);
  auto d = increments(s.ts);
  const double max_d = *std::max_element(d.begin(), d.end());
  std::nth_element(d.begin(), d.begin() + static_cast<long>(d.size() / 2), d.end());
  const double median_d = d[d.size() / 2];
  CHECK(max_d >= 3.0 * median_d);
  CHECK(max_d > 0.0);
}

TEST_CASE("silent segment falls back to the linear ramp") {
  const auto a = analyze_segment(support::silence(10.0));
  CHECK(a.energy.fallback);
  const auto s = frame_schedule(a.energy, 30.0, 10.0);
  CHECK(s.fallback);
  for (std::size_t j = 0; j < s.ts.size(); ++j) CHECK(std::abs(s.ts[j] - j / 299.0) <= 1e-9);
}

TEST_CASE("property: percussive weighting sharpens the schedule") {
  auto mix = support::sine(440.0, 10.0, 22050, 0.3);
  for (double t = 0.3; t < 10.0; t += 0.5) support::add_click(mix, t, 0.8);
  EnergyParams perc_heavy;
  EnergyParams harm_heavy;
  harm_heavy.weights = {0.1, 0.9};
  const auto a = frame_schedule(analyze_segment(mix, perc_heavy).energy, 30.0, 10.0);
  const auto b = frame_schedule(analyze_segment(mix, harm_heavy).energy, 30.0, 10.0);
  CHECK(variance(increments(a.ts)) > variance(increments(b.ts)));
}

TEST_CASE("analyze_segment zero-pads short buffers") {
  const auto a = analyze_segment(support::sine(440.0, 0.02));
  CHECK(a.energy.values.front() == 0.0);
  CHECK(a.energy.values.back() == 1.0);
}
