#include <cmath>
#include <numbers>
#include <numeric>

#include "mirflex/audio.h"
#include "mirflex/error.h"

namespace mirflex {
namespace {

constexpr int kTaps = 64;
constexpr int kHalfTaps = kTaps / 2;
constexpr long kMaxPhases = 8192;
constexpr double kKaiserBeta = 8.0;
// Cutoff as a fraction of the lower Nyquist rate; leaves room for the
// transition band of a 64-tap kernel.
constexpr double kCutoff = 0.94;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double x) {
  // x in [-1, 1]
  double t = 1.0 - x * x;
  if (t <= 0.0) return 0.0;
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(t)) / std::cyl_bessel_i(0.0, kKaiserBeta);
}

// Kernel taps for one fractional offset frac in [0, 1): tap k multiplies
// input sample floor(pos) + k - kHalfTaps + 1.
std::vector<double> phase_taps(double frac, double fc) {
  std::vector<double> taps(kTaps);
  double sum = 0.0;
  for (int k = 0; k < kTaps; ++k) {
    double d = static_cast<double>(k - kHalfTaps + 1) - frac;
    double w = kaiser(d / (kHalfTaps + 0.5));
    taps[k] = fc * sinc(fc * d) * w;
    sum += taps[k];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

}  // namespace

AudioBuffer resample(const AudioBuffer& buf, int target_hz) {
  if (target_hz <= 0) throw Error(ErrorKind::kInvalidArgument, "target rate must be positive");
  const int src_hz = buf.sample_rate_hz();
  if (target_hz == src_hz) return buf;

  const long g = std::gcd(static_cast<long>(src_hz), static_cast<long>(target_hz));
  const long up = target_hz / g;
  const long down = src_hz / g;
  const long phases = std::min(up, kMaxPhases);
  const double fc = kCutoff * std::min(1.0, static_cast<double>(target_hz) / src_hz);

  std::vector<std::vector<double>> table(phases);
  for (long p = 0; p < phases; ++p) {
    table[p] = phase_taps(static_cast<double>(p) / phases, fc);
  }

  auto in = buf.samples();
  const long n_in = static_cast<long>(in.size());
  const long n_out = std::lround(static_cast<double>(n_in) * target_hz / src_hz);
  std::vector<float> out(n_out);
  for (long n = 0; n < n_out; ++n) {
    // Input position n * down / up, split into integer and phase parts.
    long num = n * down;
    long base = num / up;
    long rem = num % up;
    long phase = phases == up ? rem : (rem * phases) / up;
    const auto& taps = table[phase];
    double acc = 0.0;
    long first = base - kHalfTaps + 1;
    for (int k = 0; k < kTaps; ++k) {
      long idx = first + k;
      if (idx >= 0 && idx < n_in) acc += taps[k] * in[idx];
    }
    out[n] = static_cast<float>(std::clamp(acc, -1.0, 1.0));
  }
  return AudioBuffer(std::move(out), target_hz, buf.source_path());
}

}  // namespace mirflex
