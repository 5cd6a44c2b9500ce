#include "mirflex/dsp.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fft.h"
#include "mirflex/error.h"

namespace mirflex {
namespace {

// Below this relative change in summed log-magnitude the flux is numerical
// noise (float quantization, window/phase interplay of stationary tones).
constexpr double kRelativeFluxFloor = 1e-3;
// Log bins whose natural triangle misses every linear bin and share their
// nearest linear bin with a neighbour are unresolvable below this bin.
constexpr std::size_t kMinResolvableBin = 4;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

Spectrogram stft(const AudioBuffer& buf, std::size_t window_len, std::size_t hop) {
  if (!is_power_of_two(window_len)) {
    throw Error(ErrorKind::kInvalidArgument, "window length must be a power of two");
  }
  if (hop == 0 || hop > window_len) {
    throw Error(ErrorKind::kInvalidArgument, "hop must be in [1, window length]");
  }
  const auto samples = buf.samples();
  if (samples.size() < window_len) {
    throw Error(ErrorKind::kEmptySignal, "signal shorter than one analysis window");
  }
  const std::size_t n_frames = (samples.size() - window_len) / hop + 1;
  const std::size_t n_bins = window_len / 2 + 1;
  const double sr = buf.sample_rate_hz();

  std::vector<double> window(window_len);
  for (std::size_t i = 0; i < window_len; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / window_len);
  }

  Spectrogram spec;
  spec.magnitudes = Matrix(n_frames, n_bins);
  spec.hop_sec = hop / sr;
  spec.frame_offset_sec = window_len / (2.0 * sr);
  spec.window_sec = window_len / sr;
  spec.bin_freqs_hz.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) spec.bin_freqs_hz[k] = k * sr / window_len;

  detail::RealFft fft(window_len);
  auto in = fft.input();
  for (std::size_t t = 0; t < n_frames; ++t) {
    const float* frame = samples.data() + t * hop;
    for (std::size_t i = 0; i < window_len; ++i) in[i] = frame[i] * window[i];
    fft.forward();
    auto out = spec.magnitudes.row(t);
    auto bins = fft.spectrum();
    for (std::size_t k = 0; k < n_bins; ++k) out[k] = std::abs(bins[k]);
  }
  return spec;
}

Spectrogram analysis_stft(const AudioBuffer& buf, std::size_t window_len, std::size_t hop) {
  if (buf.empty()) throw Error(ErrorKind::kEmptySignal, "empty signal");
  const auto samples = buf.samples();
  std::vector<float> padded(samples.size() + 2 * window_len, 0.0f);
  std::copy(samples.begin(), samples.end(), padded.begin() + static_cast<long>(window_len));
  Spectrogram spec = stft(AudioBuffer(std::move(padded), buf.sample_rate_hz()), window_len, hop);
  spec.frame_offset_sec -= spec.window_sec;
  return spec;
}

Spectrogram logfreq_spectrogram(const Spectrogram& spec, const LogFreqParams& params) {
  if (spec.bins_per_octave != 0) {
    throw Error(ErrorKind::kInvalidArgument, "input must be a linear-frequency spectrogram");
  }
  if (params.bins_per_octave <= 0 || params.n_bins <= 0 || !(params.fmin_hz > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid log-frequency parameters");
  }
  const auto& lin = spec.bin_freqs_hz;
  if (lin.size() < 2) throw Error(ErrorKind::kInvalidArgument, "too few linear bins");
  const double df = lin[1] - lin[0];
  const auto n_out = static_cast<std::size_t>(params.n_bins);

  auto center = [&](double k) { return params.fmin_hz * std::exp2(k / params.bins_per_octave); };
  if (center(params.n_bins - 1.0) > lin.back()) {
    throw Error(ErrorKind::kInvalidArgument, "log bins extend beyond the Nyquist frequency");
  }

  // Sparse weights per output bin: (first linear bin, weights).
  std::vector<std::size_t> first(n_out);
  std::vector<std::vector<double>> weights(n_out);
  std::vector<long> lone_bin(n_out, -1);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double fc = center(static_cast<double>(k));
    const double lo = center(k - 1.0);
    const double hi = center(k + 1.0);

    bool natural_hit = false;
    for (std::size_t j = 0; j < lin.size(); ++j) {
      if (lin[j] > lo && lin[j] < hi) natural_hit = true;
    }
    if (!natural_hit) lone_bin[k] = std::lround(fc / df);

    // Flanks span half the distance to the neighbouring log bin, widened to
    // at least one linear bin so every output bin sees some energy.
    const double left = std::max(0.5 * (fc - lo), df);
    const double right = std::max(0.5 * (hi - fc), df);
    auto j0 = static_cast<std::size_t>(std::max(0.0, std::floor((fc - left) / df)));
    auto j1 = std::min(lin.size() - 1, static_cast<std::size_t>(std::ceil((fc + right) / df)));
    std::vector<double> w;
    double sum = 0.0;
    for (std::size_t j = j0; j <= j1; ++j) {
      double f = lin[j];
      double v = f <= fc ? 1.0 - (fc - f) / left : 1.0 - (f - fc) / right;
      v = std::max(v, 0.0);
      w.push_back(v);
      sum += v;
    }
    for (double& v : w) v /= sum;
    first[k] = j0;
    weights[k] = std::move(w);
  }
  for (std::size_t k = 1; k < n_out; ++k) {
    if (lone_bin[k] >= 0 && lone_bin[k] == lone_bin[k - 1] &&
        lone_bin[k] < static_cast<long>(kMinResolvableBin)) {
      throw Error(ErrorKind::kInsufficientResolution,
                  "log bins " + std::to_string(k - 1) + " and " + std::to_string(k) +
                      " both collapse onto linear bin " + std::to_string(lone_bin[k]));
    }
  }

  Spectrogram out;
  out.magnitudes = Matrix(spec.frames(), n_out);
  out.hop_sec = spec.hop_sec;
  out.frame_offset_sec = spec.frame_offset_sec;
  out.window_sec = spec.window_sec;
  out.bins_per_octave = params.bins_per_octave;
  out.bin_freqs_hz.resize(n_out);
  for (std::size_t k = 0; k < n_out; ++k) out.bin_freqs_hz[k] = center(static_cast<double>(k));

  for (std::size_t t = 0; t < spec.frames(); ++t) {
    auto in = spec.magnitudes.row(t);
    auto dst = out.magnitudes.row(t);
    for (std::size_t k = 0; k < n_out; ++k) {
      double acc = 0.0;
      const auto& w = weights[k];
      for (std::size_t i = 0; i < w.size(); ++i) {
        double m = in[first[k] + i];
        acc += w[i] * m * m;
      }
      dst[k] = acc;
    }
  }
  return out;
}

Chromagram chromagram(const Spectrogram& logspec, double tuning_ref_hz) {
  if (logspec.bins_per_octave != 12) {
    throw Error(ErrorKind::kWrongBinning,
                "chromagram needs 12 bins per octave, got " +
                    std::to_string(logspec.bins_per_octave));
  }
  std::vector<std::size_t> pitch_class(logspec.bins());
  for (std::size_t k = 0; k < logspec.bins(); ++k) {
    long midi = std::lround(69.0 + 12.0 * std::log2(logspec.bin_freqs_hz[k] / tuning_ref_hz));
    pitch_class[k] = static_cast<std::size_t>(((midi % 12) + 12) % 12);
  }

  Chromagram chroma;
  chroma.energies = Matrix(logspec.frames(), 12);
  chroma.hop_sec = logspec.hop_sec;
  chroma.frame_offset_sec = logspec.frame_offset_sec;
  chroma.tuning_ref_hz = tuning_ref_hz;
  for (std::size_t t = 0; t < logspec.frames(); ++t) {
    auto in = logspec.magnitudes.row(t);
    auto out = chroma.energies.row(t);
    for (std::size_t k = 0; k < in.size(); ++k) out[pitch_class[k]] += in[k];
  }
  return chroma;
}

OnsetEnvelope onset_envelope(const Spectrogram& spec) {
  if (spec.frames() < 2) throw Error(ErrorKind::kEmptySignal, "onset envelope needs two frames");

  const std::size_t n = spec.frames();
  std::vector<double> prev(spec.bins());
  std::vector<double> cur(spec.bins());
  std::vector<double> flux(n, 0.0);
  double level = 0.0;

  auto compress = [&](std::size_t t, std::vector<double>& dst) {
    auto row = spec.magnitudes.row(t);
    double total = 0.0;
    for (std::size_t b = 0; b < row.size(); ++b) {
      dst[b] = std::log1p(row[b]);
      total += dst[b];
    }
    return total;
  };

  level += compress(0, prev);
  for (std::size_t t = 1; t < n; ++t) {
    level += compress(t, cur);
    double acc = 0.0;
    for (std::size_t b = 0; b < cur.size(); ++b) acc += std::max(0.0, cur[b] - prev[b]);
    flux[t] = acc;
    std::swap(prev, cur);
  }

  OnsetEnvelope env;
  env.hop_sec = spec.hop_sec;
  // A Hann-weighted flux peaks when the onset sits three quarters of the way
  // into the window, a quarter window after the frame center.
  env.frame_offset_sec = spec.frame_offset_sec + spec.window_sec / 4.0;
  env.strength.assign(n, 0.0);

  const double peak = *std::max_element(flux.begin(), flux.end());
  const double mean_level = level / n;
  if (peak <= 0.0 || peak < kRelativeFluxFloor * mean_level) return env;
  for (std::size_t t = 0; t < n; ++t) env.strength[t] = flux[t] / peak;
  return env;
}

std::vector<double> autocorrelate(std::span<const double> x, std::size_t max_lag) {
  if (max_lag >= x.size()) {
    throw Error(ErrorKind::kLagTooLarge, "max lag " + std::to_string(max_lag) +
                                             " must be below length " + std::to_string(x.size()));
  }
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < x.size(); ++t) acc += x[t] * x[t + lag];
    r[lag] = acc;
  }
  return r;
}

}  // namespace mirflex
