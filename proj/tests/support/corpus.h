#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mirflex/audio.h"
#include "mirflex/harmony.h"

namespace mirflex::testing {

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "mirflex");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

double midi_to_hz(double midi);

/// Whole file as a string; empty when it cannot be opened.
std::string read_text(const std::string& path);

/// Ascending scale over one octave from the tonic in octave 4, then a
/// I-IV-V-I cadence (i-iv-V-i in minor). 8 s total.
AudioBuffer key_suite_file(int tonic, Mode mode, int sample_rate_hz = kCanonicalSampleRate);

struct ChordPiece {
  AudioBuffer audio;
  std::vector<ChordSegment> truth;
};

/// 3 to 6 random triads, 2 s each, consecutive chords distinct.
ChordPiece chord_suite_file(std::mt19937& rng, int sample_rate_hz = kCanonicalSampleRate);

/// Triad in close position with the root between C3 and B3.
std::vector<double> triad_hz(const ChordLabel& chord);

/// Harmonic complex (f0, n partials with 1/k amplitudes) under a raised-cosine
/// amplitude modulation of the given rate and depth.
AudioBuffer vocal_like(double f0_hz, double am_hz, double duration_sec, std::uint32_t seed,
                       int partials = 10, double depth = 1.0);
AudioBuffer white_noise(double duration_sec, std::uint32_t seed, double amplitude = 0.5);

/// Concatenation of buffers at a common rate.
AudioBuffer concat(const std::vector<AudioBuffer>& parts);
/// Sample-wise sum scaled to a 0.9 peak.
AudioBuffer mix(const std::vector<AudioBuffer>& parts);

}  // namespace mirflex::testing
