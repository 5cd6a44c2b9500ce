#include "corpus.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include <unistd.h>

namespace mirflex::testing {

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

double midi_to_hz(double midi) { return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0); }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

AudioBuffer notes(std::vector<double> freqs, double seconds, int sr) {
  return synth_tone(freqs, seconds, sr);
}

}  // namespace

AudioBuffer key_suite_file(int tonic, Mode mode, int sr) {
  const bool major = mode == Mode::kMajor;
  const std::vector<int> scale = major ? std::vector<int>{0, 2, 4, 5, 7, 9, 11, 12}
                                       : std::vector<int>{0, 2, 3, 5, 7, 8, 10, 12};
  const double base = 60 + tonic;  // tonic in octave 4
  std::vector<AudioBuffer> parts;
  for (int step : scale) parts.push_back(notes({midi_to_hz(base + step)}, 0.5, sr));

  const int third = major ? 4 : 3;
  auto chord = [&](int root, int quality_third) {
    return notes({midi_to_hz(base + root), midi_to_hz(base + root + quality_third),
                  midi_to_hz(base + root + 7)},
                 1.0, sr);
  };
  parts.push_back(chord(0, third));
  parts.push_back(chord(5, third));
  parts.push_back(chord(7 - 12, 4));  // dominant below the tonic, always major
  parts.push_back(chord(0, third));
  return concat(parts);
}

std::vector<double> triad_hz(const ChordLabel& chord) {
  const double root = 48 + chord.root;
  const int third = chord.quality == ChordQuality::kMajor ? 4 : 3;
  return {midi_to_hz(root), midi_to_hz(root + third), midi_to_hz(root + 7)};
}

ChordPiece chord_suite_file(std::mt19937& rng, int sr) {
  std::uniform_int_distribution<int> count(3, 6), label(0, 23);
  ChordPiece piece;
  std::vector<AudioBuffer> parts;
  int n = count(rng);
  int previous = -1;
  for (int i = 0; i < n; ++i) {
    int idx;
    do idx = label(rng);
    while (idx == previous);
    previous = idx;
    ChordLabel c = ChordLabel::from_index(idx);
    parts.push_back(synth_tone(triad_hz(c), 2.0, sr));
    piece.truth.push_back({2.0 * i, 2.0 * (i + 1), c, 1.0});
  }
  piece.audio = concat(parts);
  return piece;
}

AudioBuffer vocal_like(double f0, double am_hz, double duration_sec, std::uint32_t seed,
                       int partials, double depth) {
  const int sr = kCanonicalSampleRate;
  const auto n = static_cast<std::size_t>(std::llround(duration_sec * sr));
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<double> phases(partials);
  for (auto& p : phases) p = phase(rng);
  const double am_phase = phase(rng);

  std::vector<double> x(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / sr;
    double s = 0.0;
    for (int k = 1; k <= partials; ++k) {
      if (k * f0 >= sr / 2.0) break;
      s += std::sin(2.0 * std::numbers::pi * k * f0 * t + phases[k - 1]) / k;
    }
    double env = 1.0 - depth * 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * am_hz * t + am_phase));
    x[i] = s * env;
    peak = std::max(peak, std::abs(x[i]));
  }
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(peak > 0 ? 0.9 * x[i] / peak : 0.0);
  return AudioBuffer(std::move(out), sr);
}

AudioBuffer white_noise(double duration_sec, std::uint32_t seed, double amplitude) {
  const auto n = static_cast<std::size_t>(std::llround(duration_sec * kCanonicalSampleRate));
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(static_cast<float>(-amplitude), static_cast<float>(amplitude));
  std::vector<float> out(n);
  for (auto& s : out) s = u(rng);
  return AudioBuffer(std::move(out), kCanonicalSampleRate);
}

AudioBuffer concat(const std::vector<AudioBuffer>& parts) {
  std::vector<float> out;
  int sr = parts.empty() ? kCanonicalSampleRate : parts.front().sample_rate_hz();
  for (const auto& p : parts) out.insert(out.end(), p.samples().begin(), p.samples().end());
  return AudioBuffer(std::move(out), sr);
}

AudioBuffer mix(const std::vector<AudioBuffer>& parts) {
  std::size_t n = 0;
  for (const auto& p : parts) n = std::max(n, p.size());
  std::vector<double> acc(n, 0.0);
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.size(); ++i) acc[i] += p.samples()[i];
  }
  double peak = 0.0;
  for (double v : acc) peak = std::max(peak, std::abs(v));
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(peak > 0 ? 0.9 * acc[i] / peak : 0.0);
  int sr = parts.empty() ? kCanonicalSampleRate : parts.front().sample_rate_hz();
  return AudioBuffer(std::move(out), sr);
}

}  // namespace mirflex::testing
