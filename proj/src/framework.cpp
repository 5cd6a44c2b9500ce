#include "mirflex/framework.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <set>
#include <thread>

#include "mirflex/error.h"

namespace mirflex {

double param_number(const ParamMap& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  if (!it->second.is_number()) {
    throw Error(ErrorKind::kConfigInvalid, "parameter '" + key + "' must be a number", key);
  }
  return it->second.get<double>();
}

void check_param_keys(const ParamMap& params, const std::vector<std::string>& allowed,
                      const std::string& extractor_id) {
  for (const auto& [key, value] : params) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorKind::kConfigInvalid,
                  "unknown parameter '" + key + "' for extractor " + extractor_id, key);
    }
    if (!value.is_primitive() || value.is_null()) {
      throw Error(ErrorKind::kConfigInvalid, "parameter '" + key + "' must be a scalar", key);
    }
  }
}

const char* to_string(ExtractorKind kind) {
  return kind == ExtractorKind::kBuiltin ? "builtin" : "external";
}

AnalysisContext::AnalysisContext(AudioBuffer audio, std::string source_path)
    : audio_(std::move(audio)), source_path_(std::move(source_path)) {}

const Spectrogram& AnalysisContext::spectrogram() {
  if (!spectrogram_) spectrogram_ = analysis_stft(audio_);
  return *spectrogram_;
}

const Chromagram& AnalysisContext::chroma() {
  if (!chroma_) chroma_ = chromagram(logfreq_spectrogram(spectrogram()));
  return *chroma_;
}

const OnsetEnvelope& AnalysisContext::onsets() {
  if (!onsets_) onsets_ = onset_envelope(spectrogram());
  return *onsets_;
}

const ExtractorDescriptor& Registry::register_extractor(ExtractorDescriptor descriptor,
                                                        ExtractorFactory factory) {
  if (descriptor.id.empty()) throw Error(ErrorKind::kInvalidArgument, "extractor id is empty");
  if (descriptor.features.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "extractor " + descriptor.id + " lists no features");
  }
  if (entries_.count(descriptor.id)) {
    throw Error(ErrorKind::kDuplicateId, "extractor id already registered: " + descriptor.id,
                descriptor.id);
  }
  std::string id = descriptor.id;
  auto [it, inserted] = entries_.emplace(id, Entry{std::move(descriptor), std::move(factory)});
  return it->second.descriptor;
}

bool Registry::contains(const std::string& id) const { return entries_.count(id) > 0; }

const ExtractorDescriptor& Registry::descriptor(const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw Error(ErrorKind::kConfigInvalid, "unknown extractor " + id, id);
  return it->second.descriptor;
}

std::vector<ExtractorDescriptor> Registry::list() const {
  std::vector<ExtractorDescriptor> out;
  for (const auto& [id, entry] : entries_) out.push_back(entry.descriptor);
  return out;
}

std::vector<std::string> Registry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, entry] : entries_) out.push_back(id);
  return out;
}

std::unique_ptr<Extractor> Registry::create(const std::string& id, const ParamMap& params) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw Error(ErrorKind::kConfigInvalid, "unknown extractor " + id, id);
  auto extractor = it->second.factory(params);
  if (!extractor) throw Error(ErrorKind::kConfigInvalid, "factory for " + id + " returned nothing");
  return extractor;
}

Registry builtin_registry() {
  Registry r;
  register_builtin_extractors(r);
  return r;
}

PipelineConfig pipeline_config_from_json(const Json& j) {
  auto invalid = [](const std::string& what) { throw Error(ErrorKind::kConfigInvalid, what); };
  if (!j.is_object()) invalid("config must be a JSON object");
  PipelineConfig config;
  for (const auto& [key, value] : j.items()) {
    if (key == "input_paths") {
      if (!value.is_array()) invalid("input_paths must be an array");
      for (const auto& p : value) {
        if (!p.is_string()) invalid("input_paths entries must be strings");
        config.input_paths.push_back(p.get<std::string>());
      }
    } else if (key == "enabled_extractors") {
      if (!value.is_array()) invalid("enabled_extractors must be an array");
      for (const auto& e : value) {
        ExtractorConfig ec;
        if (e.is_string()) {
          ec.id = e.get<std::string>();
        } else if (e.is_object() && e.contains("id") && e["id"].is_string()) {
          ec.id = e["id"].get<std::string>();
          if (auto it = e.find("params"); it != e.end()) {
            if (!it->is_object()) invalid("params of " + ec.id + " must be an object");
            for (const auto& [pk, pv] : it->items()) ec.params[pk] = pv;
          }
        } else {
          invalid("enabled_extractors entries need a string id");
        }
        config.enabled_extractors.push_back(std::move(ec));
      }
    } else if (key == "output_path") {
      if (!value.is_string()) invalid("output_path must be a string");
      config.output_path = value.get<std::string>();
    } else if (key == "workers") {
      if (!value.is_number_integer()) invalid("workers must be an integer");
      config.workers = value.get<int>();
    } else if (key == "record_timing") {
      if (!value.is_boolean()) invalid("record_timing must be a boolean");
      config.record_timing = value.get<bool>();
    } else {
      invalid("unknown config key '" + key + "'");
    }
  }
  return config;
}

Json pipeline_config_to_json(const PipelineConfig& config) {
  Json extractors = Json::array();
  for (const auto& e : config.enabled_extractors) {
    Json params = Json::object();
    for (const auto& [k, v] : e.params) params[k] = v;
    extractors.push_back({{"id", e.id}, {"params", std::move(params)}});
  }
  return {{"input_paths", config.input_paths},
          {"enabled_extractors", std::move(extractors)},
          {"output_path", config.output_path},
          {"workers", config.workers},
          {"record_timing", config.record_timing}};
}

namespace {

using Workers = std::vector<std::unique_ptr<Extractor>>;

Workers instantiate(const PipelineConfig& config, const Registry& registry) {
  Workers out;
  for (const auto& e : config.enabled_extractors) {
    try {
      out.push_back(registry.create(e.id, e.params));
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::kConfigInvalid) throw;
      throw Error(ErrorKind::kConfigInvalid, "cannot create " + e.id + ": " + err.what(), e.id);
    }
  }
  return out;
}

void validate_config(const PipelineConfig& config, const Registry& registry) {
  if (config.enabled_extractors.empty()) {
    throw Error(ErrorKind::kConfigInvalid, "no extractors enabled");
  }
  if (config.workers < 1) throw Error(ErrorKind::kConfigInvalid, "workers must be at least 1");
  std::set<std::string> seen;
  for (const auto& e : config.enabled_extractors) {
    if (!registry.contains(e.id)) {
      throw Error(ErrorKind::kConfigInvalid, "unknown extractor id '" + e.id + "'", e.id);
    }
    if (!seen.insert(e.id).second) {
      throw Error(ErrorKind::kConfigInvalid, "extractor enabled twice: " + e.id, e.id);
    }
  }
  if (!config.output_path.empty()) {
    auto parent = std::filesystem::path(config.output_path).parent_path();
    std::error_code ec;
    if (!parent.empty() && !std::filesystem::is_directory(parent, ec)) {
      throw Error(ErrorKind::kOutputUnwritable, "output directory does not exist: " + parent.string(),
                  config.output_path);
    }
  }
}

FileReport process_file(const std::string& path, const PipelineConfig& config, Workers& extractors) {
  FileReport file;
  file.path = path;
  AudioBuffer audio;
  try {
    audio = resample(decode_wav(path), kCanonicalSampleRate);
  } catch (const std::exception& e) {
    file.errors.push_back({kDecoderErrorId, e.what()});
    return file;
  }
  file.duration_sec = audio.duration_sec();
  AnalysisContext ctx(std::move(audio), path);

  for (std::size_t i = 0; i < extractors.size(); ++i) {
    const std::string& id = config.enabled_extractors[i].id;
    std::vector<FeatureRecord> records;
    try {
      records = extractors[i]->extract(ctx);
      for (auto& r : records) {
        if (r.extractor_id.empty()) r.extractor_id = id;
        if (r.extractor_id != id) {
          throw Error(ErrorKind::kInvalidArgument,
                      "record claims extractor id '" + r.extractor_id + "'", "extractor_id");
        }
        if (auto field = invalid_record_field(r)) {
          throw Error(ErrorKind::kInvalidArgument, "invalid record field '" + *field + "'", *field);
        }
      }
    } catch (const std::exception& e) {
      file.errors.push_back({id, e.what()});
      continue;
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const FeatureRecord& a, const FeatureRecord& b) {
                       return a.start_sec < b.start_sec;
                     });
    file.records.insert(file.records.end(), records.begin(), records.end());
  }
  return file;
}

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& config, const Registry& registry) {
  validate_config(config, registry);
  // Fail fast on bad parameters before touching any input.
  instantiate(config, registry);

  const auto started = std::chrono::steady_clock::now();
  const std::size_t n_files = config.input_paths.size();
  std::vector<FileReport> files(n_files);
  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min<std::size_t>(config.workers, std::max<std::size_t>(n_files, 1)));

  std::atomic<std::size_t> next{0};
  auto work = [&](Workers extractors) {
    for (std::size_t i = next++; i < n_files; i = next++) {
      files[i] = process_file(config.input_paths[i], config, extractors);
    }
  };
  if (n_workers == 1) {
    work(instantiate(config, registry));
  } else {
    std::vector<Workers> per_worker;
    for (std::size_t w = 0; w < n_workers; ++w) per_worker.push_back(instantiate(config, registry));
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < n_workers; ++w) {
      threads.emplace_back(work, std::move(per_worker[w]));
    }
    for (auto& t : threads) t.join();
  }

  PipelineReport report;
  report.files = std::move(files);
  for (const auto& f : report.files) {
    if (f.failed()) {
      ++report.failed;
    } else {
      ++report.processed;
    }
  }
  if (config.record_timing) {
    report.wall_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  if (!config.output_path.empty()) write_text_file(config.output_path, serialize_report(report));
  return report;
}

}  // namespace mirflex
