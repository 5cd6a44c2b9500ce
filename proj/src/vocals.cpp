#include "mirflex/vocals.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fft.h"
#include "mirflex/error.h"

namespace mirflex {
namespace {

constexpr double kBandLowHz = 200.0;
constexpr double kBandHighHz = 4000.0;
constexpr double kModLowHz = 2.0;
constexpr double kModHighHz = 8.0;
// Squared relative envelope fluctuation treated as "no modulation".
constexpr double kModulationReference = 0.01;
constexpr double kSilentFrame = 0.01;
constexpr double kMinDurationSec = 3.0;
constexpr double kPitchLowHz = 80.0;
constexpr double kPitchHighHz = 400.0;
constexpr double kEnvelopeWindowSec = 0.020;
constexpr double kEnvelopeFloor = 1e-3;
constexpr std::size_t kPitchFrame = 2048;
constexpr double kPeakFraction = 0.9;

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

double modulation_ratio(const Spectrogram& spec, std::size_t lo, std::size_t hi) {
  const std::size_t n = spec.frames();
  std::vector<double> energy(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    auto row = spec.magnitudes.row(t);
    for (std::size_t b = lo; b <= hi; ++b) energy[t] += row[b] * row[b];
  }
  const double mean = std::accumulate(energy.begin(), energy.end(), 0.0) / n;
  if (mean <= 0.0) return 0.0;
  double variance = 0.0;
  for (double e : energy) variance += (e - mean) * (e - mean);
  variance /= n;

  const std::size_t size = next_pow2(2 * n);
  detail::RealFft fft(size);
  auto in = fft.input();
  std::fill(in.begin(), in.end(), 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (t + 0.5) / n);
    in[t] = (energy[t] - mean) * w;
  }
  fft.forward();
  auto bins = fft.spectrum();
  const double frame_rate = 1.0 / spec.hop_sec;
  double band = 0.0, total = 0.0;
  for (std::size_t k = 1; k < bins.size(); ++k) {
    double p = std::norm(bins[k]);
    double f = k * frame_rate / size;
    total += p;
    if (f >= kModLowHz && f <= kModHighHz) band += p;
  }
  if (total <= 0.0) return 0.0;
  double band_var = variance * band / total;
  return band_var / (variance + kModulationReference * mean * mean);
}

double mid_flatness(const Spectrogram& spec, std::size_t lo, std::size_t hi) {
  const std::size_t n = spec.frames();
  std::vector<double> energy(n, 0.0);
  double max_energy = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    auto row = spec.magnitudes.row(t);
    for (std::size_t b = lo; b <= hi; ++b) energy[t] += row[b] * row[b];
    max_energy = std::max(max_energy, energy[t]);
  }
  if (max_energy <= 0.0) return 0.0;

  double sum = 0.0;
  std::size_t voiced = 0;
  const double count = static_cast<double>(hi - lo + 1);
  for (std::size_t t = 0; t < n; ++t) {
    if (energy[t] < kSilentFrame * max_energy) continue;
    auto row = spec.magnitudes.row(t);
    double peak = *std::max_element(row.begin() + static_cast<long>(lo),
                                    row.begin() + static_cast<long>(hi) + 1);
    double floor = 1e-10 * peak;
    double log_sum = 0.0, lin_sum = 0.0;
    for (std::size_t b = lo; b <= hi; ++b) {
      double m = std::max(row[b], floor);
      log_sum += std::log(m);
      lin_sum += m;
    }
    sum += std::exp(log_sum / count) / (lin_sum / count);
    ++voiced;
  }
  return voiced ? sum / static_cast<double>(voiced) : 0.0;
}

double harmonicity(const AudioBuffer& buf) {
  const auto x = buf.samples();
  const std::size_t n = x.size();
  const double sr = buf.sample_rate_hz();

  // Short-time RMS envelope, centered, used to divide out amplitude modulation.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + double(x[i]) * x[i];
  const auto half = static_cast<std::size_t>(std::max(1.0, kEnvelopeWindowSec * sr / 2.0));
  std::vector<double> env(n);
  double env_max = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a = i >= half ? i - half : 0;
    std::size_t b = std::min(n, i + half + 1);
    env[i] = std::sqrt((prefix[b] - prefix[a]) / static_cast<double>(b - a));
    env_max = std::max(env_max, env[i]);
  }
  if (env_max <= 0.0) return 0.0;
  const double env_floor = kEnvelopeFloor * env_max;

  const std::size_t frame = std::min(kPitchFrame, n);
  const std::size_t n_frames = n / frame;
  const auto min_lag = static_cast<std::size_t>(std::ceil(sr / kPitchHighHz));
  const auto max_lag = static_cast<std::size_t>(std::floor(sr / kPitchLowHz));
  if (max_lag + 2 >= frame) return 0.0;

  std::vector<double> frame_energy(n_frames);
  double max_frame_energy = 0.0;
  for (std::size_t f = 0; f < n_frames; ++f) {
    frame_energy[f] = prefix[(f + 1) * frame] - prefix[f * frame];
    max_frame_energy = std::max(max_frame_energy, frame_energy[f]);
  }

  detail::RealFft fft(next_pow2(2 * frame));
  std::vector<double> y(frame);
  std::vector<double> ycum(frame + 1);
  std::vector<double> r(max_lag + 2);
  double sum = 0.0;
  std::size_t voiced = 0;
  for (std::size_t f = 0; f < n_frames; ++f) {
    if (frame_energy[f] < kSilentFrame * max_frame_energy) continue;
    ++voiced;
    auto in = fft.input();
    std::fill(in.begin(), in.end(), 0.0);
    ycum[0] = 0.0;
    for (std::size_t i = 0; i < frame; ++i) {
      std::size_t idx = f * frame + i;
      y[i] = x[idx] / std::max(env[idx], env_floor);
      in[i] = y[i];
      ycum[i + 1] = ycum[i] + y[i] * y[i];
    }
    fft.forward();
    for (auto& c : fft.spectrum()) c = std::norm(c);
    fft.inverse();
    const double scale = static_cast<double>(fft.size());
    for (std::size_t lag = 0; lag < r.size(); ++lag) {
      double head = ycum[frame - lag];
      double tail = ycum[frame] - ycum[lag];
      double denom = std::sqrt(head * tail);
      r[lag] = denom > 0.0 ? fft.input()[lag] / scale / denom : 0.0;
    }

    // Pitch period: first local maximum past the zero-lag lobe reaching 90%
    // of the strongest correlation, which rejects octave-down multiples.
    std::size_t start = 1;
    while (start < r.size() && r[start] > 0.0) ++start;
    if (start + 1 >= r.size()) continue;
    double best = *std::max_element(r.begin() + static_cast<long>(start), r.end() - 1);
    if (best <= 0.0) continue;
    for (std::size_t lag = start; lag + 1 < r.size(); ++lag) {
      if (r[lag] >= kPeakFraction * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
        if (lag >= min_lag && lag <= max_lag) sum += r[lag];
        break;
      }
    }
  }
  return voiced ? sum / static_cast<double>(voiced) : 0.0;
}

}  // namespace

FeatureMap vocal_features(const AudioBuffer& buf) {
  if (buf.duration_sec() < kMinDurationSec) {
    throw Error(ErrorKind::kTooShort, "vocal features need at least 3 s of audio");
  }
  return vocal_features(buf, stft(buf));
}

FeatureMap vocal_features(const AudioBuffer& buf, const Spectrogram& spec) {
  if (buf.duration_sec() < kMinDurationSec) {
    throw Error(ErrorKind::kTooShort, "vocal features need at least 3 s of audio");
  }
  const auto& freqs = spec.bin_freqs_hz;
  auto lo = static_cast<std::size_t>(
      std::lower_bound(freqs.begin(), freqs.end(), kBandLowHz) - freqs.begin());
  auto hi = static_cast<std::size_t>(
      std::upper_bound(freqs.begin(), freqs.end(), kBandHighHz) - freqs.begin());
  if (hi == 0 || lo >= hi) throw Error(ErrorKind::kInvalidArgument, "spectrogram misses the mid band");
  --hi;

  FeatureMap features;
  features[kMod4HzRatio] = modulation_ratio(spec, lo, hi);
  features[kFlatnessMid] = mid_flatness(spec, lo, hi);
  features[kHarmonicity] = harmonicity(buf);
  return features;
}

FeatureMap default_vocal_weights() {
  return {{kMod4HzRatio, 2.0}, {kHarmonicity, 1.0}, {kFlatnessMid, -1.5}};
}

VocalsDecision classify_vocals(const FeatureMap& features, const FeatureMap& weights,
                               double threshold) {
  VocalsDecision d;
  for (const auto& [name, w] : weights) {
    auto it = features.find(name);
    if (it == features.end()) throw Error(ErrorKind::kMissingFeature, "missing feature " + name, name);
    if (!std::isfinite(it->second)) {
      throw Error(ErrorKind::kInvalidArgument, "feature " + name + " is not finite", name);
    }
    d.score += w * it->second;
  }
  d.features = features;
  d.vocals = d.score >= threshold;
  return d;
}

}  // namespace mirflex
