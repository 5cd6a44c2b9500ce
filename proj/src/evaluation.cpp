#include "mirflex/evaluation.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "mirflex/error.h"

namespace mirflex {
namespace detail {
extern const char* const kCatalogJson;
}

double key_score(const KeyLabel& predicted, const KeyLabel& truth, KeyScoring scoring) {
  if (predicted == truth) return 1.0;
  if (scoring == KeyScoring::kExact) return 0.0;
  if (predicted.mode == truth.mode) {
    return predicted.tonic == (truth.tonic + 7) % 12 ? 0.5 : 0.0;
  }
  if (predicted.tonic == truth.tonic) return 0.2;
  // Relative keys share a scale: the minor tonic sits three semitones below the major one.
  int major_tonic = truth.mode == Mode::kMajor ? truth.tonic : predicted.tonic;
  int minor_tonic = truth.mode == Mode::kMajor ? predicted.tonic : truth.tonic;
  return (major_tonic - minor_tonic + 12) % 12 == 3 ? 0.3 : 0.0;
}

namespace {

std::vector<ChordSegment> prepared(std::span<const ChordSegment> segments, double total,
                                   const char* which) {
  std::vector<ChordSegment> out;
  for (const auto& s : segments) {
    if (!std::isfinite(s.start_sec) || !std::isfinite(s.end_sec) || s.end_sec < s.start_sec) {
      throw Error(ErrorKind::kInvalidArgument, std::string(which) + " segment has bad bounds");
    }
    ChordSegment c = s;
    if (total >= 0.0) {
      c.start_sec = std::clamp(c.start_sec, 0.0, total);
      c.end_sec = std::clamp(c.end_sec, 0.0, total);
    }
    out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.start_sec < b.start_sec; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].start_sec < out[i - 1].end_sec) {
      throw Error(ErrorKind::kOverlappingSegments,
                  std::string(which) + " segments overlap at " + std::to_string(out[i].start_sec) +
                      " s");
    }
  }
  return out;
}

}  // namespace

double wcsr(std::span<const ChordSegment> predicted, std::span<const ChordSegment> truth,
            double total_duration_sec) {
  auto pred = prepared(predicted, total_duration_sec, "predicted");
  auto gt = prepared(truth, total_duration_sec, "truth");

  double labeled = 0.0;
  for (const auto& t : gt) labeled += t.end_sec - t.start_sec;
  if (labeled <= 0.0) return 1.0;

  double correct = 0.0;
  std::size_t p = 0;
  for (const auto& t : gt) {
    while (p < pred.size() && pred[p].end_sec <= t.start_sec) ++p;
    for (std::size_t q = p; q < pred.size() && pred[q].start_sec < t.end_sec; ++q) {
      if (pred[q].label != t.label) continue;
      double overlap = std::min(t.end_sec, pred[q].end_sec) - std::max(t.start_sec, pred[q].start_sec);
      if (overlap > 0.0) correct += overlap;
    }
  }
  return std::clamp(correct / labeled, 0.0, 1.0);
}

double beat_f_measure(std::span<const double> predicted, std::span<const double> truth,
                      double window_sec) {
  if (predicted.empty() && truth.empty()) return 1.0;
  if (predicted.empty() || truth.empty()) return 0.0;

  std::vector<double> pred(predicted.begin(), predicted.end());
  std::vector<double> gt(truth.begin(), truth.end());
  std::sort(pred.begin(), pred.end());
  std::sort(gt.begin(), gt.end());

  // Tolerance absorbs rounding in shifted time stamps sitting exactly on the window.
  const double reach = window_sec + 1e-9;
  struct Pair {
    double distance;
    std::size_t p, t;
  };
  std::vector<Pair> pairs;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    while (lo < gt.size() && gt[lo] < pred[i] - reach) ++lo;
    for (std::size_t j = lo; j < gt.size() && gt[j] <= pred[i] + reach; ++j) {
      pairs.push_back({std::abs(pred[i] - gt[j]), i, j});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.distance < b.distance; });

  std::vector<bool> pred_used(pred.size()), gt_used(gt.size());
  std::size_t matched = 0;
  for (const auto& pr : pairs) {
    if (pred_used[pr.p] || gt_used[pr.t]) continue;
    pred_used[pr.p] = gt_used[pr.t] = true;
    ++matched;
  }
  if (matched == 0) return 0.0;
  double precision = static_cast<double>(matched) / pred.size();
  double recall = static_cast<double>(matched) / gt.size();
  return 2.0 * precision * recall / (precision + recall);
}

double tempo_accuracy(double predicted_bpm, double truth_bpm, double tolerance, bool allow_octave) {
  if (!(truth_bpm > 0.0) || !(tolerance >= 0.0) || !std::isfinite(predicted_bpm)) {
    throw Error(ErrorKind::kInvalidArgument, "tempo accuracy needs a positive reference tempo");
  }
  auto within = [&](double reference) {
    return std::abs(predicted_bpm - reference) / reference <= tolerance + 1e-12;
  };
  if (within(truth_bpm)) return 1.0;
  if (allow_octave) {
    for (double k : {2.0, 3.0, 0.5, 1.0 / 3.0}) {
      if (within(truth_bpm * k)) return 1.0;
    }
  }
  return 0.0;
}

namespace {

const std::vector<CandidateEntry>& catalog() {
  static const std::vector<CandidateEntry> entries = [] {
    std::vector<CandidateEntry> out;
    const Json root = Json::parse(detail::kCatalogJson);
    for (const auto& e : root.at("entries")) {
      out.push_back({e.at("task"), e.at("approach"), e.at("dataset"), e.at("metric_name"),
                     e.at("value"), e.at("source_table"), e.value("note", std::string())});
    }
    return out;
  }();
  return entries;
}

}  // namespace

std::vector<std::string> catalog_tasks() {
  std::vector<std::string> tasks;
  for (const auto& e : catalog()) {
    if (std::find(tasks.begin(), tasks.end(), e.task) == tasks.end()) tasks.push_back(e.task);
  }
  return tasks;
}

std::vector<CandidateEntry> catalog_query(const std::string& task) {
  std::vector<CandidateEntry> out;
  for (const auto& e : catalog()) {
    if (e.task == task) out.push_back(e);
  }
  if (out.empty()) {
    std::string known;
    for (const auto& t : catalog_tasks()) known += (known.empty() ? "" : ", ") + t;
    throw Error(ErrorKind::kInvalidArgument, "unknown catalog task '" + task + "' (known: " + known + ")",
                task);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.value > b.value; });
  return out;
}

Json catalog_to_json(const std::vector<CandidateEntry>& entries) {
  Json out = Json::array();
  for (const auto& e : entries) {
    Json j = {{"task", e.task},
              {"approach", e.approach},
              {"dataset", e.dataset},
              {"metric_name", e.metric_name},
              {"value", e.value},
              {"source_table", e.source_table}};
    if (!e.note.empty()) j["note"] = e.note;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<ChordSegment> parse_chord_lab(const std::string& text) {
  std::vector<ChordSegment> out;
  std::istringstream lines(text);
  std::string line;
  int number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    ChordSegment s;
    std::string label, extra;
    if (!(fields >> s.start_sec >> s.end_sec >> label) || (fields >> extra)) {
      throw Error(ErrorKind::kParseError, "chord lab line " + std::to_string(number) +
                                              ": expected 'start end label'");
    }
    if (s.end_sec < s.start_sec) {
      throw Error(ErrorKind::kParseError,
                  "chord lab line " + std::to_string(number) + ": end before start");
    }
    s.label = ChordLabel::parse(label);
    s.confidence = 1.0;
    out.push_back(s);
  }
  return out;
}

Annotation annotation_from_json(const Json& j, const std::string& base_dir) {
  static const std::vector<std::string> known = {"path",  "key",   "chords", "chords_lab",
                                                 "beats", "tempo", "vocals"};
  if (!j.is_object()) throw Error(ErrorKind::kParseError, "annotation must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw Error(ErrorKind::kParseError, "unknown annotation key '" + k + "'", k);
    }
  }
  Annotation a;
  try {
    a.path = j.at("path").get<std::string>();
    if (j.contains("key")) a.key = KeyLabel::parse(j["key"].get<std::string>());
    if (j.contains("chords") && j.contains("chords_lab")) {
      throw Error(ErrorKind::kParseError, "annotation has both chords and chords_lab");
    }
    if (j.contains("chords")) {
      std::vector<ChordSegment> chords;
      for (const auto& c : j["chords"]) {
        ChordSegment s;
        s.start_sec = c.at("start").get<double>();
        s.end_sec = c.at("end").get<double>();
        s.label = ChordLabel::parse(c.at("label").get<std::string>());
        s.confidence = 1.0;
        chords.push_back(s);
      }
      a.chords = std::move(chords);
    }
    if (j.contains("chords_lab")) {
      auto lab = std::filesystem::path(base_dir) / j["chords_lab"].get<std::string>();
      std::ifstream in(lab);
      if (!in) throw Error(ErrorKind::kNotFound, "cannot open chord lab " + lab.string());
      std::stringstream ss;
      ss << in.rdbuf();
      a.chords = parse_chord_lab(ss.str());
    }
    if (j.contains("beats")) a.beats = j["beats"].get<std::vector<double>>();
    if (j.contains("tempo")) a.tempo_bpm = j["tempo"].get<double>();
    if (j.contains("vocals")) {
      auto v = j["vocals"].get<std::string>();
      if (v != "vocals" && v != "instrumental") {
        throw Error(ErrorKind::kParseError, "vocals annotation must be vocals or instrumental");
      }
      a.vocals = v;
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("malformed annotation: ") + e.what());
  }
  if (a.tempo_bpm && !(*a.tempo_bpm > 0.0)) {
    throw Error(ErrorKind::kParseError, "annotated tempo must be positive");
  }
  if (a.chords) prepared(*a.chords, -1.0, "annotated");
  return a;
}

Annotation load_annotation(const std::string& path) {
  return annotation_from_json(read_json_file(path),
                              std::filesystem::path(path).parent_path().string());
}

std::vector<Annotation> load_annotations(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorKind::kNotFound, "annotation directory not found: " + dir, dir);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Annotation> out;
  for (const auto& f : files) out.push_back(load_annotation(f.string()));
  return out;
}

namespace {

const Annotation* find_annotation(const std::string& path, const std::vector<Annotation>& all) {
  for (const auto& a : all) {
    if (a.path == path) return &a;
  }
  auto name = std::filesystem::path(path).filename();
  for (const auto& a : all) {
    if (std::filesystem::path(a.path).filename() == name) return &a;
  }
  return nullptr;
}

// Records of `feature` from the first extractor that produced it.
std::vector<const FeatureRecord*> predictions(const FileReport& file, const std::string& feature) {
  std::vector<const FeatureRecord*> out;
  const std::string* owner = nullptr;
  for (const auto& r : file.records) {
    if (r.feature != feature) continue;
    if (!owner) owner = &r.extractor_id;
    if (r.extractor_id == *owner) out.push_back(&r);
  }
  return out;
}

double tempo_of(const FeatureRecord& r) {
  auto it = r.metadata.find("bpm");
  const std::string& text = it != r.metadata.end() ? it->second : r.label;
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw Error(ErrorKind::kParseError, "tempo record has no numeric bpm: '" + text + "'");
  }
}

}  // namespace

ScoreTable evaluate_report(const PipelineReport& report, const std::vector<Annotation>& annotations) {
  ScoreTable table;
  for (const auto& file : report.files) {
    const Annotation* truth = find_annotation(file.path, annotations);
    if (!truth) {
      table.skipped.push_back(file.path);
      continue;
    }
    FileScores scores{file.path, {}};

    if (truth->key) {
      if (auto p = predictions(file, "key"); !p.empty()) {
        KeyLabel k = KeyLabel::parse(p.front()->label);
        scores.features["key"] = {{"accuracy", key_score(k, *truth->key, KeyScoring::kExact)},
                                  {"weighted", key_score(k, *truth->key)}};
      }
    }
    if (truth->chords) {
      if (auto p = predictions(file, "chord"); !p.empty()) {
        std::vector<ChordSegment> segs;
        for (const auto* r : p) segs.push_back({r->start_sec, r->end_sec, ChordLabel::parse(r->label), r->confidence});
        scores.features["chord"] = {{"wcsr", wcsr(segs, *truth->chords, file.duration_sec)}};
      }
    }
    if (truth->beats) {
      auto beats = predictions(file, "beat");
      if (!beats.empty() || !predictions(file, "tempo").empty()) {
        std::vector<double> times;
        for (const auto* r : beats) times.push_back(r->start_sec);
        scores.features["beat"] = {{"f_measure", beat_f_measure(times, *truth->beats)}};
      }
    }
    if (truth->tempo_bpm) {
      if (auto p = predictions(file, "tempo"); !p.empty()) {
        double bpm = tempo_of(*p.front());
        scores.features["tempo"] = {{"accuracy1", tempo_accuracy(bpm, *truth->tempo_bpm)},
                                    {"accuracy2", tempo_accuracy(bpm, *truth->tempo_bpm,
                                                                 kDefaultTempoTolerance, true)}};
      }
    }
    if (truth->vocals) {
      if (auto p = predictions(file, "vocals"); !p.empty()) {
        scores.features["vocals"] = {{"accuracy", p.front()->label == *truth->vocals ? 1.0 : 0.0}};
      }
    }
    table.files.push_back(std::move(scores));
  }
  if (table.files.empty()) {
    throw Error(ErrorKind::kNoOverlap, "no report file has an annotation");
  }

  for (const auto& f : table.files) {
    for (const auto& [feature, metrics] : f.features) {
      ++table.file_counts[feature];
      for (const auto& [name, value] : metrics) table.aggregate[feature][name] += value;
    }
  }
  for (auto& [feature, metrics] : table.aggregate) {
    for (auto& [name, value] : metrics) value /= table.file_counts[feature];
  }
  return table;
}

Json score_table_to_json(const ScoreTable& table) {
  Json files = Json::object();
  for (const auto& f : table.files) {
    Json features = Json::object();
    for (const auto& [feature, metrics] : f.features) features[feature] = metrics;
    files[f.path] = std::move(features);
  }
  Json aggregate = Json::object();
  for (const auto& [feature, metrics] : table.aggregate) {
    aggregate[feature] = {{"files", table.file_counts.at(feature)}, {"metrics", metrics}};
  }
  return {{"files", files}, {"aggregate", aggregate}, {"skipped", table.skipped}};
}

}  // namespace mirflex
