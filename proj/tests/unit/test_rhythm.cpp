#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "corpus.h"
#include "mirflex/error.h"
#include "mirflex/rhythm.h"

using namespace mirflex;
using namespace mirflex::testing;

namespace {

ErrorKind thrown_kind(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no exception");
  return ErrorKind::kInvalidArgument;
}

OnsetEnvelope envelope_of(const AudioBuffer& audio) { return onset_envelope(analysis_stft(audio)); }

OnsetEnvelope impulse_envelope(std::size_t frames, std::size_t period, std::size_t phase,
                               double hop = 0.02) {
  OnsetEnvelope env;
  env.hop_sec = hop;
  env.strength.assign(frames, 0.0);
  for (std::size_t i = phase; i < frames; i += period) env.strength[i] = 1.0;
  return env;
}

// Best objective over every subset of frames, by enumeration.
double best_subset_objective(std::span<const double> env, double period) {
  const std::size_t n = env.size();
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<std::size_t> beats;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) beats.push_back(i);
    }
    best = std::max(best, beat_objective(env, beats, period));
  }
  return best;
}

}  // namespace

TEST_SUITE("rhythm") {

TEST_CASE("120 BPM click track") {
  auto est = estimate_tempo(envelope_of(synth_click_track(120, 10.0).audio));
  CHECK(std::abs(est.bpm - 120.0) <= 0.02 * 120.0);
  CHECK(est.strength > 0.0);
  CHECK(est.strength <= 1.0);
  REQUIRE_FALSE(est.tempogram.empty());
  for (std::size_t i = 1; i < est.tempogram.size(); ++i) {
    CHECK(est.tempogram[i].bpm < est.tempogram[i - 1].bpm);
  }
  CHECK(est.tempogram.front().bpm <= kMaxBpm + 1e-9);
  CHECK(est.tempogram.back().bpm >= kMinBpm - 1.0);
}

TEST_CASE("240 BPM reports the octave alternative") {
  auto est = estimate_tempo(envelope_of(synth_click_track(240, 10.0).audio));
  const bool base = std::abs(est.bpm - 240.0) <= 4.8;
  const bool half = std::abs(est.bpm - 120.0) <= 2.4;
  CHECK((base || half));
  // The competing peak sits on an integer lag, so it gets the 4% tempo tolerance.
  if (base) CHECK(std::abs(est.octave_bpm - 120.0) <= 0.04 * 120.0);
  if (half) CHECK(std::abs(est.octave_bpm - 240.0) <= 0.04 * 240.0);
  CHECK(est.octave_score > 0.0);
}

TEST_CASE("tempo errors") {
  CHECK(thrown_kind([] { estimate_tempo(envelope_of(synth_tone(std::vector<double>{440.0}, 8.0))); }) ==
        ErrorKind::kNoPeriodicity);
  CHECK(thrown_kind([] { estimate_tempo(envelope_of(synth_click_track(120, 2.0).audio)); }) ==
        ErrorKind::kTooShort);
}

TEST_CASE("tempo is gain invariant on the envelope") {
  auto env = envelope_of(synth_click_track(97, 8.0).audio);
  auto scaled = env;
  for (auto& v : scaled.strength) v *= 3.0;
  CHECK(estimate_tempo(env).bpm == doctest::Approx(estimate_tempo(scaled).bpm));
}

TEST_CASE("beats of a 100 BPM click track") {
  auto track = synth_click_track(100, 10.0);
  auto env = envelope_of(track.audio);
  auto beats = track_beats(env, 100.0);
  CHECK(beats.size() >= 16);
  CHECK(beats.size() <= 18);
  // Every true click has a tracked beat within 35 ms and vice versa.
  auto near = [](const std::vector<double>& xs, double t) {
    return std::any_of(xs.begin(), xs.end(), [&](double x) { return std::abs(x - t) <= 0.035; });
  };
  for (double t : track.beat_times) CHECK(near(beats, t));
  for (double b : beats) CHECK(near(track.beat_times, b));
}

TEST_CASE("tracker follows the phase of an impulse grid") {
  for (std::size_t phase : {0u, 3u, 7u}) {
    auto env = impulse_envelope(400, 25, phase);
    auto beats = track_beat_frames(env.strength, 25.0);
    REQUIRE_FALSE(beats.empty());
    for (auto b : beats) CHECK(b % 25 == phase);
    CHECK(beats.size() == (400 - phase + 24) / 25);
  }
}

TEST_CASE("dynamic program reaches the exhaustive optimum") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> env(9);
    for (auto& v : env) v = u(rng);
    const double period = 1.5 + 2.5 * u(rng);
    auto beats = track_beat_frames(env, period);
    CHECK(beat_objective(env, beats, period) == doctest::Approx(best_subset_objective(env, period)));
  }
  std::vector<double> tiny(5, 0.0);
  tiny[2] = 1.0;
  CHECK(beat_objective(tiny, track_beat_frames(tiny, 2.0), 2.0) ==
        doctest::Approx(best_subset_objective(tiny, 2.0)));
}

TEST_CASE("tracked beats satisfy the gap constraints") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> env(300);
    for (auto& v : env) v = u(rng) * u(rng);
    const double period = 8.0 + 30.0 * u(rng);
    auto beats = track_beat_frames(env, period);
    REQUIRE_FALSE(beats.empty());
    for (std::size_t i = 1; i < beats.size(); ++i) {
      const double gap = static_cast<double>(beats[i] - beats[i - 1]);
      CHECK(gap >= period / 2 - 1e-9);
      CHECK(gap <= 2 * period + 1e-9);
    }
    CHECK(beats.back() < env.size());
    CHECK(std::isfinite(beat_objective(env, beats, period)));
  }
}

TEST_CASE("shifting the envelope shifts the beats") {
  auto env = envelope_of(synth_click_track(110, 8.0).audio);
  auto base = track_beat_frames(env.strength, 60.0 / 110 / env.hop_sec);
  std::vector<double> shifted(10, 0.0);
  shifted.insert(shifted.end(), env.strength.begin(), env.strength.end());
  auto moved = track_beat_frames(shifted, 60.0 / 110 / env.hop_sec);
  REQUIRE(moved.size() == base.size());
  for (std::size_t i = 0; i < base.size(); ++i) CHECK(moved[i] == base[i] + 10);
}

TEST_CASE("downbeats land on accented clicks") {
  auto track = synth_click_track(120, 10.0, kCanonicalSampleRate, 4, 2.0, 3);
  auto env = envelope_of(track.audio);
  auto grid = infer_downbeats(track.beat_times, env, 4, 120.0);
  REQUIRE(grid.downbeat_flags.size() == track.beat_times.size());
  CHECK(grid.downbeat_flags == track.accented);
  CHECK(grid.phase == 0);
  CHECK(grid.meter == 4);
}

TEST_CASE("downbeat phase follows the accents") {
  // Impulse grid where every fourth beat starting at index 2 is louder.
  OnsetEnvelope env = impulse_envelope(400, 20, 5);
  std::vector<double> beats;
  for (std::size_t i = 0, f = 5; f < 400; ++i, f += 20) {
    beats.push_back(env.frame_time(f));
    if (i % 4 == 2) env.strength[f] = 2.0;
  }
  auto grid = infer_downbeats(beats, env, 4);
  CHECK(grid.phase == 2);
  for (std::size_t i = 0; i < beats.size(); ++i) CHECK(grid.downbeat_flags[i] == (i % 4 == 2));
  CHECK(grid.tempo_bpm == doctest::Approx(60.0 / (20 * env.hop_sec)));

  auto flat = impulse_envelope(400, 20, 5);
  CHECK(infer_downbeats(beats, flat, 4).phase == 0);
  for (auto& v : env.strength) v *= 0.1;
  CHECK(infer_downbeats(beats, env, 4).phase == 2);
}

TEST_CASE("downbeat errors") {
  auto env = impulse_envelope(100, 10, 0);
  std::vector<double> few{0.0, 0.2, 0.4};
  CHECK(thrown_kind([&] { infer_downbeats(few, env, 4); }) == ErrorKind::kTooFewBeats);
  std::vector<double> unsorted{0.0, 0.4, 0.2, 0.6, 0.8};
  CHECK(thrown_kind([&] { infer_downbeats(unsorted, env, 4); }) == ErrorKind::kInvalidArgument);
  CHECK(thrown_kind([&] { infer_downbeats(few, env, 0); }) == ErrorKind::kInvalidArgument);
}

}  // TEST_SUITE
