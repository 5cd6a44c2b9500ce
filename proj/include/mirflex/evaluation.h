#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mirflex/harmony.h"
#include "mirflex/json_io.h"
#include "mirflex/record.h"

namespace mirflex {

enum class KeyScoring {
  kWeighted,  // exact 1, fifth above 0.5, relative 0.3, parallel 0.2
  kExact,
};

double key_score(const KeyLabel& predicted, const KeyLabel& truth,
                 KeyScoring scoring = KeyScoring::kWeighted);

/// Fraction of the labeled truth duration on which the prediction carries the
/// same label, computed by segment intersection. Both inputs are clipped to
/// [0, total_duration_sec]; a negative total disables clipping. Segment order
/// does not matter. Throws OverlappingSegments; an empty truth scores 1.
double wcsr(std::span<const ChordSegment> predicted, std::span<const ChordSegment> truth,
            double total_duration_sec);

inline constexpr double kDefaultBeatWindowSec = 0.07;

/// Greedy one-to-one matching, closest pairs first, window inclusive.
double beat_f_measure(std::span<const double> predicted, std::span<const double> truth,
                      double window_sec = kDefaultBeatWindowSec);

inline constexpr double kDefaultTempoTolerance = 0.04;

/// Accuracy1, or Accuracy2 when `allow_octave` (also truth x 2, 3, 1/2, 1/3).
/// Returns 0 or 1.
double tempo_accuracy(double predicted_bpm, double truth_bpm,
                      double tolerance = kDefaultTempoTolerance, bool allow_octave = false);

/// One row of a published benchmark table.
struct CandidateEntry {
  std::string task;
  std::string approach;
  std::string dataset;
  std::string metric_name;
  double value = 0.0;
  std::string source_table;
  /// Extra column content, e.g. the instrument count.
  std::string note;

  bool operator==(const CandidateEntry&) const = default;
};

/// Tasks present in the catalog, in table order.
std::vector<std::string> catalog_tasks();
/// Entries of one task sorted by value, descending; ties keep table order.
/// Unknown tasks raise InvalidArgument.
std::vector<CandidateEntry> catalog_query(const std::string& task);
Json catalog_to_json(const std::vector<CandidateEntry>& entries);

/// Ground truth for one audio file. Absent fields are not evaluated.
struct Annotation {
  std::string path;
  std::optional<KeyLabel> key;
  std::optional<std::vector<ChordSegment>> chords;
  std::optional<std::vector<double>> beats;
  std::optional<double> tempo_bpm;
  std::optional<std::string> vocals;
};

/// Tab- or space-separated "start end label" lines; blank lines and lines
/// starting with '#' are skipped.
std::vector<ChordSegment> parse_chord_lab(const std::string& text);

/// JSON keys: path, key, chords ([{start, end, label}]), chords_lab (file
/// relative to the annotation), beats, tempo, vocals.
Annotation annotation_from_json(const Json& value, const std::string& base_dir = ".");
Annotation load_annotation(const std::string& path);
/// Every *.json file in the directory, in name order.
std::vector<Annotation> load_annotations(const std::string& dir);

/// metric name -> value
using MetricScores = std::map<std::string, double>;

struct FileScores {
  std::string path;
  /// feature -> metrics
  std::map<std::string, MetricScores> features;
};

struct ScoreTable {
  std::vector<FileScores> files;
  /// Unweighted means over the files scoring each feature.
  std::map<std::string, MetricScores> aggregate;
  std::map<std::string, int> file_counts;
  /// Report files without an annotation.
  std::vector<std::string> skipped;
};

/// Matches report files to annotations by path, falling back to the file
/// name. A feature is scored when it is annotated and the report holds a
/// prediction for it. NoOverlap when no report file has an annotation.
ScoreTable evaluate_report(const PipelineReport& report, const std::vector<Annotation>& annotations);

Json score_table_to_json(const ScoreTable& table);

}  // namespace mirflex
