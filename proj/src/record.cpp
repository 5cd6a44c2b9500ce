#include "mirflex/record.h"

#include <cmath>

#include "mirflex/error.h"

namespace mirflex {
namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw Error(ErrorKind::kInvalidArgument, "record field '" + field + "' " + why, field);
}

const Json& require(const Json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) bad_field(field, "is missing");
  return *it;
}

std::string require_string(const Json& obj, const char* field) {
  const Json& v = require(obj, field);
  if (!v.is_string()) bad_field(field, "must be a string");
  return v.get<std::string>();
}

double require_number(const Json& obj, const char* field) {
  const Json& v = require(obj, field);
  if (!v.is_number()) bad_field(field, "must be a number");
  return v.get<double>();
}

}  // namespace

std::optional<std::string> invalid_record_field(const FeatureRecord& r) {
  if (r.extractor_id.empty()) return "extractor_id";
  if (r.feature.empty()) return "feature";
  if (!std::isfinite(r.start_sec) || r.start_sec < 0.0) return "start_sec";
  if (!std::isfinite(r.end_sec) || r.end_sec < r.start_sec) return "end_sec";
  if (!std::isfinite(r.confidence) || r.confidence < 0.0 || r.confidence > 1.0) return "confidence";
  if (r.latent) {
    for (double v : *r.latent) {
      if (!std::isfinite(v)) return "latent";
    }
  }
  if (r.label.empty() && !r.latent) return "label";
  return std::nullopt;
}

Json record_to_json(const FeatureRecord& r) {
  Json j = Json::object();
  j["extractor_id"] = r.extractor_id;
  j["feature"] = r.feature;
  j["start_sec"] = r.start_sec;
  j["end_sec"] = r.end_sec;
  j["label"] = r.label;
  j["confidence"] = r.confidence;
  if (r.latent) {
    Json arr = Json::array();
    for (double v : *r.latent) arr.push_back(v);
    j["latent"] = std::move(arr);
  }
  Json meta = Json::object();
  for (const auto& [k, v] : r.metadata) meta[k] = v;
  j["metadata"] = std::move(meta);
  return j;
}

FeatureRecord record_from_json(const Json& j) {
  if (!j.is_object()) bad_field("record", "must be an object");
  FeatureRecord r;
  r.extractor_id = require_string(j, "extractor_id");
  r.feature = require_string(j, "feature");
  r.start_sec = require_number(j, "start_sec");
  r.end_sec = require_number(j, "end_sec");
  r.label = require_string(j, "label");
  r.confidence = require_number(j, "confidence");
  if (auto it = j.find("latent"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) bad_field("latent", "must be an array");
    std::vector<double> latent;
    for (const auto& v : *it) {
      if (!v.is_number()) bad_field("latent", "must contain only numbers");
      latent.push_back(v.get<double>());
    }
    r.latent = std::move(latent);
  }
  if (auto it = j.find("metadata"); it != j.end()) {
    if (!it->is_object()) bad_field("metadata", "must be an object");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) bad_field("metadata", "values must be strings");
      r.metadata[k] = v.get<std::string>();
    }
  }
  if (auto field = invalid_record_field(r)) bad_field(*field, "violates record invariants");
  return r;
}

bool FileReport::failed() const {
  for (const auto& e : errors) {
    if (e.extractor_id == kDecoderErrorId) return true;
  }
  return false;
}

bool PipelineReport::has_errors() const {
  for (const auto& f : files) {
    if (!f.errors.empty()) return true;
  }
  return false;
}

Json report_to_json(const PipelineReport& report) {
  Json files = Json::array();
  for (const auto& f : report.files) {
    Json records = Json::array();
    for (const auto& r : f.records) records.push_back(record_to_json(r));
    Json errors = Json::array();
    for (const auto& e : f.errors) {
      errors.push_back({{"extractor_id", e.extractor_id}, {"message", e.message}});
    }
    files.push_back({{"path", f.path},
                     {"duration_sec", f.duration_sec},
                     {"records", std::move(records)},
                     {"errors", std::move(errors)}});
  }
  Json totals = {{"processed", report.processed},
                 {"failed", report.failed},
                 {"wall_sec", report.wall_sec}};
  return {{"files", std::move(files)}, {"totals", std::move(totals)}};
}

std::string serialize_report(const PipelineReport& report) {
  return to_canonical_json(report_to_json(report));
}

PipelineReport parse_report(const std::string& text) {
  Json j = parse_json(text);
  PipelineReport report;
  try {
    for (const auto& f : j.at("files")) {
      FileReport file;
      file.path = f.at("path").get<std::string>();
      file.duration_sec = f.at("duration_sec").get<double>();
      for (const auto& r : f.at("records")) file.records.push_back(record_from_json(r));
      for (const auto& e : f.at("errors")) {
        file.errors.push_back(
            {e.at("extractor_id").get<std::string>(), e.at("message").get<std::string>()});
      }
      report.files.push_back(std::move(file));
    }
    const auto& totals = j.at("totals");
    report.processed = totals.at("processed").get<int>();
    report.failed = totals.at("failed").get<int>();
    report.wall_sec = totals.at("wall_sec").get<double>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("report schema: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorKind::kParseError, e.what(), e.detail());
  }
  return report;
}

}  // namespace mirflex
