#include <cmath>

#include "mirflex/audio.h"
#include "mirflex/error.h"

namespace mirflex {

AudioBuffer::AudioBuffer(std::vector<float> samples, int sample_rate_hz,
                         std::optional<std::string> source_path)
    : samples_(std::move(samples)),
      sample_rate_hz_(sample_rate_hz),
      source_path_(std::move(source_path)) {
  if (sample_rate_hz_ <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "sample rate must be positive");
  }
  for (float s : samples_) {
    if (!std::isfinite(s) || s < -1.0f || s > 1.0f) {
      throw Error(ErrorKind::kInvalidArgument, "samples must be finite and within [-1, 1]");
    }
  }
}

double AudioBuffer::duration_sec() const noexcept {
  return static_cast<double>(samples_.size()) / sample_rate_hz_;
}

}  // namespace mirflex
