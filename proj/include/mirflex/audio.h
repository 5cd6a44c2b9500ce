#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mirflex {

/// Every built-in extractor consumes audio at this rate.
inline constexpr int kCanonicalSampleRate = 22050;

/// Mono floating-point signal. Samples are finite and lie in [-1, 1].
class AudioBuffer {
 public:
  AudioBuffer() = default;
  /// Throws Error(kInvalidArgument) when the invariants do not hold.
  AudioBuffer(std::vector<float> samples, int sample_rate_hz,
              std::optional<std::string> source_path = std::nullopt);

  std::span<const float> samples() const noexcept { return samples_; }
  int sample_rate_hz() const noexcept { return sample_rate_hz_; }
  const std::optional<std::string>& source_path() const noexcept { return source_path_; }

  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  double duration_sec() const noexcept;

  bool operator==(const AudioBuffer&) const = default;

 private:
  std::vector<float> samples_;
  int sample_rate_hz_ = kCanonicalSampleRate;
  std::optional<std::string> source_path_;
};

/// Sample encodings accepted by write_wav.
enum class WavEncoding { kPcm16, kPcm24, kPcm32, kFloat32 };

/// Reads a RIFF/WAVE file: PCM 16/24/32-bit or 32-bit float, 1 or 2 channels.
/// Stereo is downmixed by per-sample mean; the header rate is preserved.
AudioBuffer decode_wav(const std::string& path);

/// Writes a mono WAV file. Used by tests, fixtures and the plugin conformance
/// check, which hands audio to plugins by path.
void write_wav(const std::string& path, const AudioBuffer& buf,
               WavEncoding encoding = WavEncoding::kPcm16);

/// Band-limited windowed-sinc resampling with 64 taps per phase.
AudioBuffer resample(const AudioBuffer& buf, int target_hz);

/// Sum of sines peak-normalized to 0.9. An empty frequency list gives silence.
AudioBuffer synth_tone(std::span<const double> freqs_hz, double duration_sec,
                       int sample_rate_hz = kCanonicalSampleRate,
                       std::span<const double> amplitudes = {});

struct ClickTrack {
  AudioBuffer audio;
  std::vector<double> beat_times;
  /// True for every meter-th click, starting with the first.
  std::vector<bool> accented;
};

/// 5 ms decaying noise bursts at multiples of 60/bpm seconds. Every meter-th
/// click is accent_gain times louder than the others.
ClickTrack synth_click_track(double bpm, double duration_sec,
                             int sample_rate_hz = kCanonicalSampleRate, int meter = 4,
                             double accent_gain = 1.0, std::uint32_t seed = 0x5eedu);

}  // namespace mirflex
