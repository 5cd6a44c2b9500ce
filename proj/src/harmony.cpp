#include "mirflex/harmony.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mirflex/error.h"

namespace mirflex {
namespace {

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// Binary triad template for a label index < 24.
std::array<double, 12> triad_template(int index) {
  std::array<double, 12> t{};
  int root = index % 12;
  int third = index < 12 ? 4 : 3;
  t[root] = 1.0;
  t[(root + third) % 12] = 1.0;
  t[(root + 7) % 12] = 1.0;
  return t;
}

}  // namespace

const std::array<const char*, 12>& pitch_class_names() {
  static const std::array<const char*, 12> names = {"C",  "C#", "D",  "D#", "E",  "F",
                                                    "F#", "G",  "G#", "A",  "A#", "B"};
  return names;
}

namespace {

int parse_pitch_class(const std::string& name) {
  const auto& names = pitch_class_names();
  for (int i = 0; i < 12; ++i) {
    if (name == names[i]) return i;
  }
  return -1;
}

}  // namespace

std::string KeyLabel::to_string() const {
  return std::string(pitch_class_names().at(tonic)) +
         (mode == Mode::kMajor ? " major" : " minor");
}

KeyLabel KeyLabel::parse(const std::string& text) {
  auto space = text.find(' ');
  if (space == std::string::npos) throw Error(ErrorKind::kParseError, "bad key label '" + text + "'");
  int tonic = parse_pitch_class(text.substr(0, space));
  std::string mode = text.substr(space + 1);
  if (tonic < 0 || (mode != "major" && mode != "minor")) {
    throw Error(ErrorKind::kParseError, "bad key label '" + text + "'");
  }
  return {tonic, mode == "major" ? Mode::kMajor : Mode::kMinor};
}

KeyProfiles KeyProfiles::krumhansl_kessler() {
  return {{6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88},
          {6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17}};
}

KeyEstimate detect_key_from_profile(const std::array<double, 12>& mean_chroma,
                                    const KeyProfiles& profiles) {
  KeyEstimate est;
  std::array<double, 12> rotated{};
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (int m = 0; m < 2; ++m) {
      const auto& profile = m == 0 ? profiles.major : profiles.minor;
      for (int pc = 0; pc < 12; ++pc) rotated[pc] = profile[(pc - tonic + 12) % 12];
      est.scores[m * 12 + tonic] = pearson(mean_chroma, rotated);
    }
  }

  // Scan lower tonics first and major before minor so strict comparison
  // implements the tie rule.
  int best = -1;
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (int m = 0; m < 2; ++m) {
      int idx = m * 12 + tonic;
      if (best < 0 || est.scores[idx] > est.scores[best]) best = idx;
    }
  }
  double second = -std::numeric_limits<double>::infinity();
  for (int idx = 0; idx < 24; ++idx) {
    if (idx != best) second = std::max(second, est.scores[idx]);
  }
  est.key = {best % 12, best < 12 ? Mode::kMajor : Mode::kMinor};
  est.best_score = est.scores[best];
  est.second_score = second;
  est.confidence = std::clamp((est.best_score - second) / 2.0 + 0.5, 0.0, 1.0);
  return est;
}

KeyEstimate detect_key(const Chromagram& chroma, const KeyProfiles& profiles) {
  std::array<double, 12> mean{};
  std::size_t voiced = 0;
  for (std::size_t t = 0; t < chroma.frames(); ++t) {
    auto row = chroma.energies.row(t);
    double total = std::accumulate(row.begin(), row.end(), 0.0);
    if (total <= 0.0) continue;
    ++voiced;
    for (int pc = 0; pc < 12; ++pc) mean[pc] += row[pc];
  }
  if (voiced == 0) throw Error(ErrorKind::kSilentInput, "no voiced frames for key detection");
  for (double& v : mean) v /= static_cast<double>(voiced);
  return detect_key_from_profile(mean, profiles);
}

ChordLabel ChordLabel::from_index(int index) {
  if (index < 0 || index >= kCount) throw Error(ErrorKind::kInvalidArgument, "chord index out of range");
  if (index == 24) return no_chord();
  return {index % 12, index < 12 ? ChordQuality::kMajor : ChordQuality::kMinor};
}

int ChordLabel::index() const {
  switch (quality) {
    case ChordQuality::kMajor: return root;
    case ChordQuality::kMinor: return 12 + root;
    case ChordQuality::kNone: break;
  }
  return 24;
}

std::string ChordLabel::to_string() const {
  if (is_no_chord()) return "N";
  return std::string(pitch_class_names().at(root)) +
         (quality == ChordQuality::kMajor ? ":maj" : ":min");
}

ChordLabel ChordLabel::parse(const std::string& text) {
  if (text == "N") return no_chord();
  auto colon = text.find(':');
  if (colon == std::string::npos) throw Error(ErrorKind::kParseError, "bad chord label '" + text + "'");
  int root = parse_pitch_class(text.substr(0, colon));
  std::string q = text.substr(colon + 1);
  if (root < 0 || (q != "maj" && q != "min")) {
    throw Error(ErrorKind::kParseError, "bad chord label '" + text + "'");
  }
  return {root, q == "maj" ? ChordQuality::kMajor : ChordQuality::kMinor};
}

ViterbiResult viterbi(const Matrix& log_emissions, const Matrix& log_transitions,
                      std::span<const double> log_initial) {
  const std::size_t n_frames = log_emissions.rows;
  const std::size_t n_states = log_emissions.cols;
  if (log_transitions.rows != n_states || log_transitions.cols != n_states ||
      log_initial.size() != n_states) {
    throw Error(ErrorKind::kInvalidArgument, "viterbi dimensions disagree");
  }
  ViterbiResult result;
  if (n_frames == 0) return result;

  std::vector<double> score(n_states);
  std::vector<double> next(n_states);
  std::vector<int> back(n_frames * n_states, 0);
  for (std::size_t s = 0; s < n_states; ++s) score[s] = log_initial[s] + log_emissions(0, s);

  for (std::size_t t = 1; t < n_frames; ++t) {
    for (std::size_t s = 0; s < n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t p = 0; p < n_states; ++p) {
        double v = score[p] + log_transitions(p, s);
        if (v > best) {
          best = v;
          arg = static_cast<int>(p);
        }
      }
      next[s] = best + log_emissions(t, s);
      back[t * n_states + s] = arg;
    }
    std::swap(score, next);
  }

  auto last = std::max_element(score.begin(), score.end());
  result.log_score = *last;
  result.path.resize(n_frames);
  result.path[n_frames - 1] = static_cast<int>(last - score.begin());
  for (std::size_t t = n_frames - 1; t > 0; --t) {
    result.path[t - 1] = back[t * n_states + result.path[t]];
  }
  return result;
}

ChordFrames decode_chord_frames(const Chromagram& chroma, const ChordParams& params) {
  const std::size_t n_frames = chroma.frames();
  if (n_frames == 0) throw Error(ErrorKind::kInvalidArgument, "chord detection needs frames");
  if (!(params.self_transition > 0.0 && params.self_transition < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "self transition must lie in (0, 1)");
  }
  constexpr int kStates = ChordLabel::kCount;

  std::array<std::array<double, 12>, 24> templates;
  for (int i = 0; i < 24; ++i) templates[i] = triad_template(i);

  std::vector<double> energy(n_frames);
  double max_energy = 0.0;
  for (std::size_t t = 0; t < n_frames; ++t) {
    auto row = chroma.energies.row(t);
    energy[t] = std::accumulate(row.begin(), row.end(), 0.0);
    max_energy = std::max(max_energy, energy[t]);
  }

  ChordFrames out;
  out.emissions = Matrix(n_frames, kStates);
  for (std::size_t t = 0; t < n_frames; ++t) {
    auto row = chroma.energies.row(t);
    double norm = std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
    bool silent = max_energy <= 0.0 || energy[t] < params.silence_threshold * max_energy;
    for (int i = 0; i < 24; ++i) {
      double cos = 0.0;
      if (norm > 0.0) {
        cos = std::inner_product(row.begin(), row.end(), templates[i].begin(), 0.0) /
              (norm * std::sqrt(3.0));
      }
      out.emissions(t, i) = std::max(cos, params.emission_floor);
    }
    out.emissions(t, 24) = silent ? params.no_chord_score : params.emission_floor;
  }

  const double sigma = params.self_transition;
  const double other = (1.0 - sigma) / (kStates - 1);
  Matrix log_trans(kStates, kStates, std::log(other));
  for (int s = 0; s < kStates; ++s) log_trans(s, s) = std::log(sigma);
  std::vector<double> log_init(kStates, -std::log(static_cast<double>(kStates)));
  Matrix log_emit(n_frames, kStates);
  for (std::size_t i = 0; i < log_emit.data.size(); ++i) log_emit.data[i] = std::log(out.emissions.data[i]);
  out.labels = viterbi(log_emit, log_trans, log_init).path;

  // Scaled forward-backward for per-frame posteriors.
  Matrix alpha(n_frames, kStates);
  Matrix beta(n_frames, kStates);
  auto propagate = [&](std::span<const double> from, std::span<double> to) {
    double total = std::accumulate(from.begin(), from.end(), 0.0);
    for (int s = 0; s < kStates; ++s) to[s] = from[s] * sigma + (total - from[s]) * other;
  };
  auto normalize = [](std::span<double> v) {
    double total = std::accumulate(v.begin(), v.end(), 0.0);
    if (total > 0.0) {
      for (double& x : v) x /= total;
    }
  };
  for (int s = 0; s < kStates; ++s) alpha(0, s) = out.emissions(0, s) / kStates;
  normalize(alpha.row(0));
  std::vector<double> tmp(kStates);
  for (std::size_t t = 1; t < n_frames; ++t) {
    propagate(alpha.row(t - 1), tmp);
    for (int s = 0; s < kStates; ++s) alpha(t, s) = tmp[s] * out.emissions(t, s);
    normalize(alpha.row(t));
  }
  for (int s = 0; s < kStates; ++s) beta(n_frames - 1, s) = 1.0;
  for (std::size_t t = n_frames - 1; t > 0; --t) {
    std::vector<double> weighted(kStates);
    for (int s = 0; s < kStates; ++s) weighted[s] = beta(t, s) * out.emissions(t, s);
    // Transition matrix is symmetric, so the forward propagation serves here.
    propagate(weighted, beta.row(t - 1));
    normalize(beta.row(t - 1));
  }
  out.margins.resize(n_frames);
  for (std::size_t t = 0; t < n_frames; ++t) {
    std::array<double, kStates> post{};
    for (int s = 0; s < kStates; ++s) post[s] = alpha(t, s) * beta(t, s);
    normalize(post);
    std::partial_sort(post.begin(), post.begin() + 2, post.end(), std::greater<>());
    out.margins[t] = std::clamp(post[0] - post[1], 0.0, 1.0);
  }
  return out;
}

std::vector<ChordSegment> detect_chords(const Chromagram& chroma, const ChordParams& params,
                                        double total_duration_sec) {
  ChordFrames frames = decode_chord_frames(chroma, params);
  const std::size_t n = frames.labels.size();
  const double half_hop = chroma.hop_sec / 2.0;
  const double end_time =
      total_duration_sec > 0.0 ? total_duration_sec : chroma.frame_time(n - 1) + half_hop;
  auto clamp_time = [&](double t) { return std::clamp(t, 0.0, end_time); };

  struct Run {
    ChordSegment seg;
    double margin_sum = 0.0;
    std::size_t count = 0;
  };
  std::vector<Run> runs;
  // Frame t covers [boundary(t), boundary(t + 1)); shared boundaries keep runs contiguous.
  auto boundary = [&](std::size_t t) {
    if (t == 0) return 0.0;
    if (t == n) return end_time;
    return clamp_time(chroma.frame_time(t) - half_hop);
  };
  for (std::size_t t = 0; t < n; ++t) {
    double start = boundary(t);
    double stop = boundary(t + 1);
    if (stop <= start) continue;
    ChordLabel label = ChordLabel::from_index(frames.labels[t]);
    if (!runs.empty() && runs.back().seg.label == label) {
      runs.back().seg.end_sec = stop;
    } else {
      runs.push_back({{start, stop, label, 0.0}, 0.0, 0});
    }
    runs.back().margin_sum += frames.margins[t];
    runs.back().count += 1;
  }

  std::vector<ChordSegment> segments;
  segments.reserve(runs.size());
  for (auto& r : runs) {
    r.seg.confidence = r.count ? r.margin_sum / static_cast<double>(r.count) : 0.0;
    segments.push_back(r.seg);
  }
  if (segments.empty()) segments.push_back({0.0, end_time, ChordLabel::no_chord(), 0.0});
  return segments;
}

}  // namespace mirflex
