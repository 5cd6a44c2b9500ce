#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mirflex/dsp.h"

namespace mirflex {

enum class Mode { kMajor, kMinor };

/// Global key: tonic pitch class (0 = C) plus mode. Text form is "C major",
/// "F# minor", with sharps only.
struct KeyLabel {
  int tonic = 0;
  Mode mode = Mode::kMajor;

  std::string to_string() const;
  /// Throws Error(kParseError) on malformed text.
  static KeyLabel parse(const std::string& text);
  /// Position in the 24-key score vector: major keys 0..11, minor 12..23.
  int index() const { return (mode == Mode::kMajor ? 0 : 12) + tonic; }

  bool operator==(const KeyLabel&) const = default;
};

/// Tone-hierarchy profiles indexed by semitones above the tonic.
struct KeyProfiles {
  std::array<double, 12> major;
  std::array<double, 12> minor;

  /// Krumhansl-Kessler probe-tone ratings.
  static KeyProfiles krumhansl_kessler();
};

struct KeyEstimate {
  KeyLabel key;
  double confidence = 0.0;
  /// Pearson correlation per key, indexed by KeyLabel::index().
  std::array<double, 24> scores{};
  double best_score = 0.0;
  double second_score = 0.0;
};

/// Correlates the mean chroma of voiced frames with all 24 rotated profiles.
/// Ties go to the lower tonic, then major. Throws SilentInput when no frame
/// carries energy.
KeyEstimate detect_key(const Chromagram& chroma,
                       const KeyProfiles& profiles = KeyProfiles::krumhansl_kessler());

/// Same correlation applied to an already-averaged 12-bin chroma vector.
KeyEstimate detect_key_from_profile(const std::array<double, 12>& mean_chroma,
                                    const KeyProfiles& profiles = KeyProfiles::krumhansl_kessler());

enum class ChordQuality { kNone, kMajor, kMinor };

/// Root plus maj/min quality, or no-chord. Text form: "C:maj", "A:min", "N".
struct ChordLabel {
  int root = -1;
  ChordQuality quality = ChordQuality::kNone;

  static constexpr int kCount = 25;
  static ChordLabel no_chord() { return {}; }
  static ChordLabel from_index(int index);
  /// 0..11 major, 12..23 minor, 24 no-chord.
  int index() const;
  bool is_no_chord() const { return quality == ChordQuality::kNone; }
  std::string to_string() const;
  static ChordLabel parse(const std::string& text);

  bool operator==(const ChordLabel&) const = default;
};

struct ChordSegment {
  double start_sec = 0.0;
  double end_sec = 0.0;
  ChordLabel label;
  double confidence = 0.0;
};

struct ChordParams {
  double self_transition = 0.9;
  /// Frames below this fraction of the loudest frame's energy are silent.
  double silence_threshold = 0.01;
  double emission_floor = 1e-3;
  /// No-chord emission on silent frames.
  double no_chord_score = 1.0;
};

struct ViterbiResult {
  std::vector<int> path;
  double log_score = 0.0;
};

/// Max-product decoding. log_emissions is frames x states, log_transitions is
/// states x states (row = from), log_initial has one entry per state.
ViterbiResult viterbi(const Matrix& log_emissions, const Matrix& log_transitions,
                      std::span<const double> log_initial);

/// Per-frame chord decoding before segment merging.
struct ChordFrames {
  std::vector<int> labels;
  /// Posterior probability of the best label minus the runner-up, per frame.
  std::vector<double> margins;
  Matrix emissions;
};

ChordFrames decode_chord_frames(const Chromagram& chroma, const ChordParams& params = {});

/// Chord segmentation: template emissions, Viterbi smoothing, maximal runs.
/// total_duration_sec, when positive, closes the final segment.
std::vector<ChordSegment> detect_chords(const Chromagram& chroma,
                                        const ChordParams& params = {},
                                        double total_duration_sec = -1.0);

/// Pitch-class names with sharps, index 0 = "C".
const std::array<const char*, 12>& pitch_class_names();

}  // namespace mirflex
