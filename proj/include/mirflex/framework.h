#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mirflex/audio.h"
#include "mirflex/dsp.h"
#include "mirflex/record.h"

namespace mirflex {

/// Flat per-extractor parameters: name -> JSON scalar.
using ParamMap = std::map<std::string, Json>;

/// Numeric parameter lookup; ConfigInvalid when present but not a number.
double param_number(const ParamMap& params, const std::string& key, double fallback);
/// ConfigInvalid naming the first key outside `allowed`.
void check_param_keys(const ParamMap& params, const std::vector<std::string>& allowed,
                      const std::string& extractor_id);

enum class ExtractorKind { kBuiltin, kExternal };
const char* to_string(ExtractorKind kind);

struct ExtractorDescriptor {
  std::string id;
  std::vector<std::string> features;
  ExtractorKind kind = ExtractorKind::kBuiltin;
  std::string version;

  bool operator==(const ExtractorDescriptor&) const = default;
};

/// Per-file analysis state shared by all extractors running on that file.
/// Derived representations are computed on first use and cached. Owned by a
/// single worker.
class AnalysisContext {
 public:
  AnalysisContext(AudioBuffer audio, std::string source_path);

  const AudioBuffer& audio() const noexcept { return audio_; }
  /// Path of the original input file, handed to external extractors.
  const std::string& source_path() const noexcept { return source_path_; }
  double duration_sec() const noexcept { return audio_.duration_sec(); }

  /// Padded analysis STFT (2048 / 512).
  const Spectrogram& spectrogram();
  const Chromagram& chroma();
  const OnsetEnvelope& onsets();

 private:
  AudioBuffer audio_;
  std::string source_path_;
  std::optional<Spectrogram> spectrogram_;
  std::optional<Chromagram> chroma_;
  std::optional<OnsetEnvelope> onsets_;
};

class Extractor {
 public:
  virtual ~Extractor() = default;
  /// Records for one file. extractor_id may be left empty; the pipeline fills
  /// it in. Exceptions become per-file error entries.
  virtual std::vector<FeatureRecord> extract(AnalysisContext& ctx) = 0;
};

/// Builds an extractor from its parameters; throws ConfigInvalid on bad
/// parameters. Called once per pipeline worker.
using ExtractorFactory = std::function<std::unique_ptr<Extractor>(const ParamMap&)>;

class Registry {
 public:
  /// Throws DuplicateId when the id is taken.
  const ExtractorDescriptor& register_extractor(ExtractorDescriptor descriptor,
                                                ExtractorFactory factory);

  bool contains(const std::string& id) const;
  const ExtractorDescriptor& descriptor(const std::string& id) const;
  /// Descriptors sorted by id.
  std::vector<ExtractorDescriptor> list() const;
  std::vector<std::string> ids() const;
  std::unique_ptr<Extractor> create(const std::string& id, const ParamMap& params) const;

 private:
  struct Entry {
    ExtractorDescriptor descriptor;
    ExtractorFactory factory;
  };
  std::map<std::string, Entry> entries_;
};

/// Ids of the built-in extractors.
inline constexpr const char* kKeyExtractorId = "key-template-v1";
inline constexpr const char* kChordExtractorId = "chord-viterbi-v1";
inline constexpr const char* kRhythmExtractorId = "rhythm-dp-v1";
inline constexpr const char* kVocalsExtractorId = "vocals-heuristic-v1";

void register_builtin_extractors(Registry& registry);
/// Registry holding only the built-in extractors.
Registry builtin_registry();

struct ExtractorConfig {
  std::string id;
  ParamMap params;
};

struct PipelineConfig {
  std::vector<std::string> input_paths;
  std::vector<ExtractorConfig> enabled_extractors;
  std::string output_path;
  int workers = 1;
  /// Stores measured wall time in the report totals. Off by default so that
  /// reports are a pure function of configuration and input bytes.
  bool record_timing = false;
};

/// Reads the JSON form {"input_paths", "enabled_extractors": [{"id", "params"}],
/// "output_path", "workers", "record_timing"}. Throws ConfigInvalid.
PipelineConfig pipeline_config_from_json(const Json& j);
Json pipeline_config_to_json(const PipelineConfig& config);

/// Decodes each input, resamples to the canonical rate, runs every enabled
/// extractor on the shared buffer and collects records. Failures of one
/// extractor or file are recorded in the report and never abort the run.
/// Writes the serialized report to output_path when it is non-empty.
/// Throws ConfigInvalid before any processing, OutputUnwritable at the end.
PipelineReport run_pipeline(const PipelineConfig& config, const Registry& registry);

}  // namespace mirflex
