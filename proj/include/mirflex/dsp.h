#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mirflex/audio.h"

namespace mirflex {

/// Dense row-major matrix; rows are time frames.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

inline constexpr std::size_t kDefaultWindow = 2048;
inline constexpr std::size_t kDefaultHop = 512;

/// Magnitude spectrogram. Linear spectrograms carry bins_per_octave == 0.
struct Spectrogram {
  Matrix magnitudes;
  double hop_sec = 0.0;
  std::vector<double> bin_freqs_hz;
  /// Center time of frame 0.
  double frame_offset_sec = 0.0;
  double window_sec = 0.0;
  int bins_per_octave = 0;

  std::size_t frames() const noexcept { return magnitudes.rows; }
  std::size_t bins() const noexcept { return magnitudes.cols; }
  double frame_time(std::size_t t) const noexcept { return frame_offset_sec + t * hop_sec; }
};

struct LogFreqParams {
  int bins_per_octave = 12;
  double fmin_hz = 65.406;  // C2
  int n_bins = 72;
};

/// Frame x 12 pitch-class energies, column 0 = C.
struct Chromagram {
  Matrix energies;
  double hop_sec = 0.0;
  double frame_offset_sec = 0.0;
  double tuning_ref_hz = 440.0;

  std::size_t frames() const noexcept { return energies.rows; }
  double frame_time(std::size_t t) const noexcept { return frame_offset_sec + t * hop_sec; }
};

/// Half-wave rectified log-magnitude flux, peak-normalized to 1.
struct OnsetEnvelope {
  std::vector<double> strength;
  double hop_sec = 0.0;
  /// Time attributed to frame 0 (see onset_envelope).
  double frame_offset_sec = 0.0;

  std::size_t size() const noexcept { return strength.size(); }
  double frame_time(std::size_t t) const noexcept { return frame_offset_sec + t * hop_sec; }
  double duration_sec() const noexcept { return strength.size() * hop_sec; }
};

/// Hann-windowed STFT without padding: floor((len - window) / hop) + 1 frames.
Spectrogram stft(const AudioBuffer& buf, std::size_t window_len = kDefaultWindow,
                 std::size_t hop = kDefaultHop);

/// STFT of the signal zero-padded by one window on both sides, so onsets at
/// the very edges of the signal register. Frame times account for the padding.
Spectrogram analysis_stft(const AudioBuffer& buf, std::size_t window_len = kDefaultWindow,
                          std::size_t hop = kDefaultHop);

/// Pools linear-bin power into log-spaced bins centered at
/// fmin * 2^(k / bins_per_octave) using triangular weights that sum to 1 per
/// output bin.
Spectrogram logfreq_spectrogram(const Spectrogram& spec, const LogFreqParams& params = {});

/// Octave folding of a 12-bins-per-octave log spectrogram.
Chromagram chromagram(const Spectrogram& logspec, double tuning_ref_hz = 440.0);

OnsetEnvelope onset_envelope(const Spectrogram& spec);

/// r[l] = sum_t x[t] * x[t + l] for l in [0, max_lag].
std::vector<double> autocorrelate(std::span<const double> x, std::size_t max_lag);

}  // namespace mirflex
