#include "mirflex/rhythm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mirflex/error.h"

namespace mirflex {
namespace {

constexpr double kPeriodicityFloor = 0.1;

void check_tempo(double bpm) {
  if (!(bpm >= kMinBpm && bpm <= kMaxBpm)) {
    throw Error(ErrorKind::kBpmOutOfRange, std::to_string(bpm) + " BPM outside [30, 300]");
  }
}

struct GapWindow {
  std::size_t min_gap;
  std::size_t max_gap;
};

GapWindow gap_window(double period_frames) {
  auto lo = static_cast<std::size_t>(std::max(1.0, std::round(period_frames / 2.0)));
  auto hi = static_cast<std::size_t>(std::max(static_cast<double>(lo), std::round(2.0 * period_frames)));
  return {lo, hi};
}

double gap_penalty(std::size_t gap, double period_frames) {
  double l = std::log(static_cast<double>(gap) / period_frames);
  return -l * l;
}

}  // namespace

TempoEstimate estimate_tempo(const OnsetEnvelope& env, const TempoParams& params) {
  if (env.duration_sec() < params.min_duration_sec) {
    throw Error(ErrorKind::kTooShort, "onset envelope spans " + std::to_string(env.duration_sec()) +
                                          " s, need " + std::to_string(params.min_duration_sec));
  }
  const double h = env.hop_sec;
  const auto n = env.size();
  auto min_lag = static_cast<std::size_t>(std::ceil(60.0 / (params.max_bpm * h)));
  auto max_lag = static_cast<std::size_t>(std::floor(60.0 / (params.min_bpm * h)));
  min_lag = std::max<std::size_t>(min_lag, 1);
  max_lag = std::min(max_lag, n - 1);
  if (min_lag > max_lag) throw Error(ErrorKind::kTooShort, "no lag range for the tempo search");

  const auto raw = autocorrelate(env.strength, max_lag);
  const double zero_lag = raw[0];

  std::vector<double> unbiased(max_lag + 1);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    unbiased[lag] = raw[lag] * static_cast<double>(n) / static_cast<double>(n - lag);
  }
  // Onsets between candidate beats (at half or a third of the lag) point at a
  // faster pulse.
  auto subdivision_level = [&](std::size_t lag) {
    double level = 0.0;
    for (double parts : {2.0, 3.0}) {
      auto center = static_cast<long>(std::lround(lag / parts));
      for (long l = std::max(center - 1, 1L); l <= center + 1; ++l) {
        level = std::max(level, unbiased[static_cast<std::size_t>(l)]);
      }
    }
    return level;
  };

  std::vector<double> score(max_lag + 1, 0.0);
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    double periodicity =
        std::max(0.0, unbiased[lag] - params.subdivision_contrast * subdivision_level(lag));
    double bpm = 60.0 / (lag * h);
    double octaves = std::log2(bpm / params.prior_bpm) / params.prior_octaves;
    score[lag] = periodicity * std::exp(-0.5 * octaves * octaves);
  }

  std::size_t best = min_lag;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    if (score[lag] > score[best]) best = lag;
  }
  if (zero_lag <= 0.0 || score[best] < kPeriodicityFloor * zero_lag) {
    throw Error(ErrorKind::kNoPeriodicity, "onset envelope shows no periodicity");
  }

  double refined = static_cast<double>(best);
  if (best > min_lag && best < max_lag) {
    double a = score[best - 1], b = score[best], c = score[best + 1];
    double denom = a - 2.0 * b + c;
    if (denom < 0.0) refined += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  }

  TempoEstimate est;
  est.bpm = std::clamp(60.0 / (refined * h), params.min_bpm, params.max_bpm);
  double total = std::accumulate(score.begin() + static_cast<long>(min_lag), score.end(), 0.0);
  est.strength = total > 0.0 ? score[best] / total : 0.0;
  for (std::size_t lag = min_lag; lag <= max_lag; ++lag) {
    est.tempogram.push_back({60.0 / (lag * h), score[lag]});
  }

  // Strongest lag within one lag of the half and double period.
  auto peak_near = [&](double lag_f) -> std::pair<std::size_t, double> {
    std::size_t out = 0;
    double s = -1.0;
    auto center = static_cast<long>(std::lround(lag_f));
    for (long l = center - 1; l <= center + 1; ++l) {
      if (l < static_cast<long>(min_lag) || l > static_cast<long>(max_lag)) continue;
      if (score[l] > s) {
        s = score[l];
        out = static_cast<std::size_t>(l);
      }
    }
    return {out, s};
  };
  for (double factor : {0.5, 2.0}) {
    auto [lag, s] = peak_near(refined * factor);
    if (lag != 0 && s > est.octave_score) {
      est.octave_score = s;
      est.octave_bpm = 60.0 / (lag * h);
    }
  }
  return est;
}

std::vector<std::size_t> track_beat_frames(std::span<const double> env, double period_frames,
                                           const BeatTrackParams& params) {
  const std::size_t n = env.size();
  if (n == 0) return {};
  if (!(period_frames > 0.0)) throw Error(ErrorKind::kInvalidArgument, "period must be positive");
  const GapWindow window = gap_window(period_frames);

  std::vector<double> penalty(window.max_gap + 1, 0.0);
  for (std::size_t g = window.min_gap; g <= window.max_gap; ++g) {
    penalty[g] = params.alpha * gap_penalty(g, period_frames);
  }

  std::vector<double> cum(n);
  std::vector<long> back(n, -1);
  for (std::size_t t = 0; t < n; ++t) {
    double best = 0.0;  // starting a fresh chain at t
    long arg = -1;
    if (t >= window.min_gap) {
      std::size_t g_hi = std::min(window.max_gap, t);
      for (std::size_t g = window.min_gap; g <= g_hi; ++g) {
        double v = cum[t - g] + penalty[g];
        if (v > best) {
          best = v;
          arg = static_cast<long>(t - g);
        }
      }
    }
    cum[t] = env[t] + best;
    back[t] = arg;
  }

  auto last = static_cast<long>(std::max_element(cum.begin(), cum.end()) - cum.begin());
  std::vector<std::size_t> beats;
  for (long t = last; t >= 0; t = back[t]) beats.push_back(static_cast<std::size_t>(t));
  std::reverse(beats.begin(), beats.end());
  return beats;
}

double beat_objective(std::span<const double> env, std::span<const std::size_t> beats,
                      double period_frames, const BeatTrackParams& params) {
  if (beats.empty()) return -std::numeric_limits<double>::infinity();
  const GapWindow window = gap_window(period_frames);
  double total = 0.0;
  for (std::size_t i = 0; i < beats.size(); ++i) {
    total += env[beats[i]];
    if (i == 0) continue;
    if (beats[i] <= beats[i - 1]) return -std::numeric_limits<double>::infinity();
    std::size_t gap = beats[i] - beats[i - 1];
    if (gap < window.min_gap || gap > window.max_gap) return -std::numeric_limits<double>::infinity();
    total += params.alpha * gap_penalty(gap, period_frames);
  }
  return total;
}

std::vector<double> track_beats(const OnsetEnvelope& env, double tempo_bpm,
                                const BeatTrackParams& params) {
  check_tempo(tempo_bpm);
  const double period_frames = 60.0 / tempo_bpm / env.hop_sec;
  std::vector<double> times;
  for (std::size_t f : track_beat_frames(env.strength, period_frames, params)) {
    times.push_back(env.frame_time(f));
  }
  return times;
}

BeatGrid infer_downbeats(std::span<const double> beats, const OnsetEnvelope& env, int meter,
                         double tempo_bpm) {
  if (meter < 1) throw Error(ErrorKind::kInvalidArgument, "meter must be positive");
  if (beats.size() < static_cast<std::size_t>(meter)) {
    throw Error(ErrorKind::kTooFewBeats, std::to_string(beats.size()) + " beats for meter " +
                                             std::to_string(meter));
  }
  for (std::size_t i = 1; i < beats.size(); ++i) {
    if (!(beats[i] > beats[i - 1])) {
      throw Error(ErrorKind::kInvalidArgument, "beats must be strictly ascending");
    }
  }

  BeatGrid grid;
  grid.meter = meter;
  grid.beats.assign(beats.begin(), beats.end());
  if (tempo_bpm > 0.0) {
    grid.tempo_bpm = tempo_bpm;
  } else {
    std::vector<double> gaps;
    for (std::size_t i = 1; i < beats.size(); ++i) gaps.push_back(beats[i] - beats[i - 1]);
    double median = 0.0;
    if (!gaps.empty()) {
      std::nth_element(gaps.begin(), gaps.begin() + static_cast<long>(gaps.size() / 2), gaps.end());
      median = gaps[gaps.size() / 2];
    }
    grid.tempo_bpm = median > 0.0 ? 60.0 / median : 120.0;
  }
  grid.tempo_bpm = std::clamp(grid.tempo_bpm, kMinBpm, kMaxBpm);

  auto strength_at = [&](double time) {
    if (env.size() == 0) return 0.0;
    long f = std::lround((time - env.frame_offset_sec) / env.hop_sec);
    double acc = 0.0;
    for (long g = f - 1; g <= f + 1; ++g) {
      if (g >= 0 && g < static_cast<long>(env.size())) acc += env.strength[g];
    }
    return acc;
  };

  std::vector<double> phase_sum(meter, 0.0);
  for (std::size_t i = 0; i < beats.size(); ++i) phase_sum[i % meter] += strength_at(beats[i]);
  int best = 0;
  for (int p = 1; p < meter; ++p) {
    // Relative tolerance so float summation order cannot break exact ties.
    if (phase_sum[p] > phase_sum[best] * (1.0 + 1e-12) + 1e-15) best = p;
  }
  grid.phase = best;
  grid.downbeat_flags.resize(beats.size());
  for (std::size_t i = 0; i < beats.size(); ++i) {
    grid.downbeat_flags[i] = static_cast<int>(i % meter) == best;
  }
  return grid;
}

}  // namespace mirflex
