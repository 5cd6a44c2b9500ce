#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mirflex/audio.h"
#include "mirflex/error.h"

namespace mirflex {
namespace {

constexpr double kPeak = 0.9;
constexpr double kClickSec = 0.005;

}  // namespace

AudioBuffer synth_tone(std::span<const double> freqs_hz, double duration_sec,
                       int sample_rate_hz, std::span<const double> amplitudes) {
  if (duration_sec <= 0.0 || sample_rate_hz <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "duration and sample rate must be positive");
  }
  if (!amplitudes.empty() && amplitudes.size() != freqs_hz.size()) {
    throw Error(ErrorKind::kInvalidArgument, "amplitudes must match frequencies");
  }
  const double nyquist = sample_rate_hz / 2.0;
  for (double f : freqs_hz) {
    if (f >= nyquist) {
      throw Error(ErrorKind::kAliasedFrequency,
                  std::to_string(f) + " Hz is at or above Nyquist " + std::to_string(nyquist));
    }
    if (f < 0.0) throw Error(ErrorKind::kInvalidArgument, "negative frequency");
  }

  const auto n = static_cast<std::size_t>(std::llround(duration_sec * sample_rate_hz));
  std::vector<double> acc(n, 0.0);
  for (std::size_t j = 0; j < freqs_hz.size(); ++j) {
    double a = amplitudes.empty() ? 1.0 : amplitudes[j];
    double w = 2.0 * std::numbers::pi * freqs_hz[j] / sample_rate_hz;
    for (std::size_t i = 0; i < n; ++i) acc[i] += a * std::sin(w * static_cast<double>(i));
  }
  double peak = 0.0;
  for (double v : acc) peak = std::max(peak, std::abs(v));
  double scale = peak > 0.0 ? kPeak / peak : 0.0;

  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(acc[i] * scale);
  return AudioBuffer(std::move(out), sample_rate_hz);
}

ClickTrack synth_click_track(double bpm, double duration_sec, int sample_rate_hz, int meter,
                             double accent_gain, std::uint32_t seed) {
  if (!(bpm >= 30.0 && bpm <= 300.0)) {
    throw Error(ErrorKind::kBpmOutOfRange, std::to_string(bpm) + " BPM outside [30, 300]");
  }
  if (duration_sec <= 0.0 || sample_rate_hz <= 0 || meter < 1 || !(accent_gain >= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid click track parameters");
  }

  const auto n = static_cast<std::size_t>(std::llround(duration_sec * sample_rate_hz));
  const auto burst_len = static_cast<std::size_t>(std::llround(kClickSec * sample_rate_hz));
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> burst(burst_len);
  double burst_peak = 0.0;
  for (std::size_t i = 0; i < burst_len; ++i) {
    double t = static_cast<double>(i) / burst_len;
    burst[i] = uni(rng) * std::exp(-5.0 * t);
    burst_peak = std::max(burst_peak, std::abs(burst[i]));
  }
  for (double& b : burst) b /= burst_peak;

  ClickTrack track;
  std::vector<float> out(n, 0.0f);
  const double period = 60.0 / bpm;
  for (long k = 0;; ++k) {
    double t = k * period;
    if (t >= duration_sec) break;
    bool accent = k % meter == 0;
    double gain = kPeak / accent_gain * (accent ? accent_gain : 1.0);
    auto start = static_cast<std::size_t>(std::llround(t * sample_rate_hz));
    for (std::size_t i = 0; i < burst_len && start + i < n; ++i) {
      out[start + i] = static_cast<float>(std::clamp(out[start + i] + gain * burst[i], -1.0, 1.0));
    }
    track.beat_times.push_back(t);
    track.accented.push_back(accent);
  }
  track.audio = AudioBuffer(std::move(out), sample_rate_hz);
  return track;
}

}  // namespace mirflex
