#pragma once

#include <span>
#include <vector>

#include "mirflex/dsp.h"

namespace mirflex {

inline constexpr double kMinBpm = 30.0;
inline constexpr double kMaxBpm = 300.0;

struct TempoParams {
  double min_bpm = kMinBpm;
  double max_bpm = kMaxBpm;
  /// Center of the log-normal tempo prior.
  double prior_bpm = 120.0;
  /// Standard deviation of the prior in octaves (log2 tempo).
  double prior_octaves = 1.0;
  /// Fraction of the strongest autocorrelation at half or a third of the lag
  /// subtracted from each lag's score. Zero scores the plain autocorrelation.
  double subdivision_contrast = 0.5;
  /// Minimum envelope length.
  double min_duration_sec = 4.0;
};

struct TempogramPoint {
  double bpm = 0.0;
  double score = 0.0;
};

struct TempoEstimate {
  double bpm = 0.0;
  /// Winning weighted score over the sum of all weighted scores.
  double strength = 0.0;
  /// One point per candidate lag, ascending lag (descending bpm).
  std::vector<TempogramPoint> tempogram;
  /// The stronger of the half- and double-tempo peaks, 0 when neither lag is
  /// in range.
  double octave_bpm = 0.0;
  double octave_score = 0.0;
};

/// Prior-weighted autocorrelation of the onset envelope over 30-300 BPM lags,
/// less a share of the autocorrelation at its subdivisions (half and third of
/// the lag), refined by parabolic interpolation around the winning lag.
TempoEstimate estimate_tempo(const OnsetEnvelope& env, const TempoParams& params = {});

struct BeatTrackParams {
  /// Weight of the tempo-regularity penalty against envelope strength.
  double alpha = 1.5;
};

/// Dynamic-programming beat tracker over envelope frames. Maximizes
///   sum env[b_i] + alpha * sum -(log(gap_i / period))^2
/// over beat subsets whose consecutive gaps lie in [period / 2, 2 * period].
std::vector<std::size_t> track_beat_frames(std::span<const double> env, double period_frames,
                                           const BeatTrackParams& params = {});

/// Objective maximized by track_beat_frames; -infinity for infeasible gaps or
/// an empty set.
double beat_objective(std::span<const double> env, std::span<const std::size_t> beats,
                      double period_frames, const BeatTrackParams& params = {});

/// Beat times in seconds at envelope frame times.
std::vector<double> track_beats(const OnsetEnvelope& env, double tempo_bpm,
                                const BeatTrackParams& params = {});

struct BeatGrid {
  double tempo_bpm = 0.0;
  std::vector<double> beats;
  std::vector<bool> downbeat_flags;
  int meter = 4;
  /// Index of the first downbeat.
  int phase = 0;
};

/// Picks the bar phase whose beats collect the most onset strength (summed
/// over each beat's frame and its immediate neighbours). Ties go to the
/// smallest phase. tempo_bpm <= 0 derives the tempo from the median beat gap.
BeatGrid infer_downbeats(std::span<const double> beats, const OnsetEnvelope& env, int meter = 4,
                         double tempo_bpm = 0.0);

}  // namespace mirflex
