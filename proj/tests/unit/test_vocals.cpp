#include <doctest.h>

#include "corpus.h"
#include "mirflex/error.h"
#include "mirflex/vocals.h"

using namespace mirflex;
using namespace mirflex::testing;

namespace {

AudioBuffer scaled(const AudioBuffer& a, float gain) {
  std::vector<float> s(a.samples().begin(), a.samples().end());
  for (auto& v : s) v *= gain;
  return AudioBuffer(std::move(s), a.sample_rate_hz());
}

}  // namespace

TEST_SUITE("vocals") {

TEST_CASE("pure sine has no modulation and no flatness") {
  auto f = vocal_features(synth_tone(std::vector<double>{440.0}, 5.0));
  CHECK(f.at(kMod4HzRatio) < 0.1);
  CHECK(f.at(kFlatnessMid) < 0.05);
  CHECK(f.size() == 3);
}

TEST_CASE("white noise is flat") {
  auto f = vocal_features(white_noise(5.0, 12));
  CHECK(f.at(kFlatnessMid) > 0.5);
  CHECK(classify_vocals(f).label() == "instrumental");
}

TEST_CASE("4 Hz modulated harmonic complex reads as voice") {
  auto f = vocal_features(vocal_like(220.0, 4.0, 5.0, 3));
  CHECK(f.at(kMod4HzRatio) > 0.5);
  CHECK(f.at(kHarmonicity) > 0.6);
  CHECK(classify_vocals(f).vocals);
}

TEST_CASE("features stay in range") {
  for (const auto& audio : {white_noise(3.5, 1), vocal_like(150.0, 5.0, 4.0, 8),
                            synth_tone(std::vector<double>{700.0, 1400.0}, 3.0),
                            synth_click_track(120, 4.0).audio}) {
    for (const auto& [name, value] : vocal_features(audio)) {
      CHECK(value >= 0.0);
      CHECK(value <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("too short") {
  try {
    vocal_features(synth_tone(std::vector<double>{440.0}, 2.5));
    FAIL("expected TooShort");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kTooShort);
  }
}

TEST_CASE("classifier arithmetic") {
  FeatureMap zero{{kMod4HzRatio, 0.0}, {kFlatnessMid, 0.0}, {kHarmonicity, 0.0}};
  auto d = classify_vocals(zero);
  CHECK_FALSE(d.vocals);
  CHECK(d.score == 0.0);
  CHECK(d.label() == "instrumental");

  FeatureMap unit{{"a", 1.0}, {"b", 1.0}, {"c", 0.0}};
  FeatureMap w{{"a", 2.0}, {"b", 1.0}, {"c", -1.5}};
  auto u = classify_vocals(unit, w);
  CHECK(u.score == doctest::Approx(3.0));
  CHECK(u.vocals);

  CHECK(classify_vocals(unit, w, 3.0).vocals);
  CHECK_FALSE(classify_vocals(unit, w, 3.0001).vocals);

  auto defaults = default_vocal_weights();
  CHECK(defaults.at(kMod4HzRatio) == 2.0);
  CHECK(defaults.at(kHarmonicity) == 1.0);
  CHECK(defaults.at(kFlatnessMid) == -1.5);
}

TEST_CASE("missing feature") {
  FeatureMap partial{{kMod4HzRatio, 0.5}, {kFlatnessMid, 0.1}};
  try {
    classify_vocals(partial);
    FAIL("expected MissingFeature");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kMissingFeature);
  }
}

TEST_CASE("score is monotone in positively weighted features") {
  FeatureMap f{{kMod4HzRatio, 0.2}, {kFlatnessMid, 0.3}, {kHarmonicity, 0.4}};
  double prev = classify_vocals(f).score;
  for (int i = 0; i < 8; ++i) {
    f[kMod4HzRatio] += 0.1;
    double s = classify_vocals(f).score;
    CHECK(s > prev);
    prev = s;
  }
  for (int i = 0; i < 5; ++i) {
    f[kFlatnessMid] += 0.1;
    double s = classify_vocals(f).score;
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("features are gain invariant and deterministic") {
  auto audio = vocal_like(180.0, 4.5, 4.0, 17);
  auto a = vocal_features(audio);
  auto b = vocal_features(scaled(audio, 0.2f));
  for (const auto& [name, value] : a) CHECK(std::abs(value - b.at(name)) < 1e-3);
  CHECK(vocal_features(audio) == a);
}

}  // TEST_SUITE
