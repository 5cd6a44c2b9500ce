#pragma once

#include <map>
#include <string>

#include "mirflex/audio.h"
#include "mirflex/dsp.h"

namespace mirflex {

using FeatureMap = std::map<std::string, double>;

inline constexpr const char* kMod4HzRatio = "mod4hz_ratio";
inline constexpr const char* kFlatnessMid = "flatness_mid";
inline constexpr const char* kHarmonicity = "harmonicity";

/// Three amplitude-ratio features over the 200-4000 Hz band:
///  - mod4hz_ratio: share of band-energy envelope fluctuation in 2-8 Hz,
///    measured against the fluctuation plus a 10% reference modulation depth
///  - flatness_mid: geometric over arithmetic mean of band magnitudes,
///    averaged over non-silent frames
///  - harmonicity: normalized autocorrelation at the detected pitch period of
///    the envelope-normalized signal; frames whose period falls outside
///    80-400 Hz contribute 0
/// Requires at least 3 s of audio (TooShort).
FeatureMap vocal_features(const AudioBuffer& buf);

/// Same, reusing an unpadded STFT of buf (see stft).
FeatureMap vocal_features(const AudioBuffer& buf, const Spectrogram& spec);

FeatureMap default_vocal_weights();
inline constexpr double kDefaultVocalThreshold = 0.8;

struct VocalsDecision {
  bool vocals = false;
  double score = 0.0;
  FeatureMap features;

  std::string label() const { return vocals ? "vocals" : "instrumental"; }
};

/// Linear score sum(w_i * f_i); vocals iff score >= threshold. Throws
/// MissingFeature when a weighted feature is absent.
VocalsDecision classify_vocals(const FeatureMap& features,
                               const FeatureMap& weights = default_vocal_weights(),
                               double threshold = kDefaultVocalThreshold);

}  // namespace mirflex
