#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mirflex/json_io.h"

namespace mirflex {

/// One extracted feature: a time span with a post-processed label, an
/// optional latent vector, or both.
struct FeatureRecord {
  std::string extractor_id;
  std::string feature;
  double start_sec = 0.0;
  double end_sec = 0.0;
  std::string label;
  double confidence = 0.0;
  std::optional<std::vector<double>> latent;
  std::map<std::string, std::string> metadata;

  bool operator==(const FeatureRecord&) const = default;
};

/// Name of the first field violating the record invariants, if any.
std::optional<std::string> invalid_record_field(const FeatureRecord& record);

Json record_to_json(const FeatureRecord& record);

/// Strict conversion from the report schema. Throws Error(kInvalidArgument)
/// whose detail() names the offending field; the result satisfies the record
/// invariants.
FeatureRecord record_from_json(const Json& value);

struct ExtractorFailure {
  std::string extractor_id;
  std::string message;

  bool operator==(const ExtractorFailure&) const = default;
};

/// Error entries for files that could not be decoded carry this id.
inline constexpr const char* kDecoderErrorId = "audio-io";

struct FileReport {
  std::string path;
  double duration_sec = 0.0;
  std::vector<FeatureRecord> records;
  std::vector<ExtractorFailure> errors;

  /// True when the file could not be decoded at all.
  bool failed() const;
  bool operator==(const FileReport&) const = default;
};

struct PipelineReport {
  std::vector<FileReport> files;
  int processed = 0;
  int failed = 0;
  double wall_sec = 0.0;

  bool has_errors() const;
  bool operator==(const PipelineReport&) const = default;
};

/// Canonical report JSON: sorted keys, six-decimal floats.
std::string serialize_report(const PipelineReport& report);
Json report_to_json(const PipelineReport& report);
/// Throws Error(kParseError) on schema violations.
PipelineReport parse_report(const std::string& text);

}  // namespace mirflex
