// mirflex: extract, evaluate, catalog and plugin management.
//
// Exit codes: 0 success, 1 report contains failures, 2 usage or configuration
// error. Machine-readable output goes to stdout, logs to stderr.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "mirflex/error.h"
#include "mirflex/evaluation.h"
#include "mirflex/framework.h"
#include "mirflex/plugin.h"

namespace fs = std::filesystem;
using namespace mirflex;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

struct ExtractArgs {
  std::string config;
  std::vector<std::string> inputs;
  std::vector<std::string> extractors;
  std::string output;
  int workers = 0;
  bool timing = false;
};

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

// Registers every persisted plugin whose id is requested.
void add_plugins(Registry& registry, const std::string& registry_path,
                 const std::vector<ExtractorConfig>& wanted) {
  for (const auto& entry : load_plugin_entries(registry_path)) {
    bool used = false;
    for (const auto& w : wanted) used |= w.id == entry.id;
    if (!used || registry.contains(entry.id)) continue;
    const auto& d = register_plugin(registry, entry.command);
    if (d.id != entry.id) {
      throw Error(ErrorKind::kConfigInvalid, "plugin registered as '" + entry.id +
                                                 "' now reports id '" + d.id + "'");
    }
  }
}

int cmd_extract(const ExtractArgs& args, const std::string& registry_path) {
  PipelineConfig config;
  if (!args.config.empty()) config = pipeline_config_from_json(read_json_file(args.config));
  if (!args.inputs.empty()) config.input_paths = args.inputs;
  if (!args.extractors.empty()) {
    config.enabled_extractors.clear();
    for (const auto& id : args.extractors) config.enabled_extractors.push_back({id, {}});
  }
  if (!args.output.empty()) config.output_path = args.output;
  if (args.workers != 0) config.workers = args.workers;
  if (args.timing) config.record_timing = true;
  if (config.input_paths.empty()) throw Error(ErrorKind::kConfigInvalid, "no input files given");

  Registry registry = builtin_registry();
  add_plugins(registry, registry_path, config.enabled_extractors);
  for (const auto& e : config.enabled_extractors) {
    if (!registry.contains(e.id)) {
      throw Error(ErrorKind::kConfigInvalid, "unknown extractor id '" + e.id +
                                                 "'; available: " + join(registry.ids(), ", "));
    }
  }

  PipelineReport report = run_pipeline(config, registry);
  for (const auto& f : report.files) {
    std::cerr << f.path << ": " << f.records.size() << " records, " << f.errors.size()
              << " errors";
    for (const auto& e : f.errors) std::cerr << "\n  [" << e.extractor_id << "] " << e.message;
    std::cerr << "\n";
  }
  std::cerr << "processed " << report.processed << ", failed " << report.failed << "\n";
  if (config.output_path.empty()) std::cout << serialize_report(report) << "\n";
  return report.has_errors() ? kExitPartial : kExitOk;
}

int cmd_eval(const std::string& report_path, const std::string& annotations_dir,
             const std::string& output) {
  std::ifstream in(report_path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open report " + report_path, report_path);
  std::stringstream text;
  text << in.rdbuf();
  PipelineReport report = parse_report(text.str());
  ScoreTable table = evaluate_report(report, load_annotations(annotations_dir));

  std::string json = to_canonical_json(score_table_to_json(table));
  if (output.empty()) {
    std::cout << json << "\n";
  } else {
    write_text_file(output, json + "\n");
  }
  for (const auto& [feature, metrics] : table.aggregate) {
    std::cerr << feature << " (" << table.file_counts.at(feature) << " files):";
    for (const auto& [name, value] : metrics) {
      char buf[64];
      std::snprintf(buf, sizeof buf, " %s=%.4f", name.c_str(), value);
      std::cerr << buf;
    }
    std::cerr << "\n";
  }
  for (const auto& s : table.skipped) std::cerr << "skipped (no annotation): " << s << "\n";
  return kExitOk;
}

int cmd_catalog(const std::string& task, const std::string& format) {
  std::vector<CandidateEntry> entries;
  if (task.empty()) {
    for (const auto& t : catalog_tasks()) {
      auto part = catalog_query(t);
      entries.insert(entries.end(), part.begin(), part.end());
    }
  } else {
    entries = catalog_query(task);
  }
  if (format == "json") {
    std::cout << to_canonical_json(catalog_to_json(entries)) << "\n";
    return kExitOk;
  }
  std::printf("%-11s %-58s %-48s %-10s %8s\n", "task", "approach", "dataset", "metric", "value");
  for (const auto& e : entries) {
    std::printf("%-11s %-58s %-48s %-10s %8g%s\n", e.task.c_str(), e.approach.c_str(),
                e.dataset.c_str(), e.metric_name.c_str(), e.value,
                e.note.empty() ? "" : ("  (" + e.note + ")").c_str());
  }
  return kExitOk;
}

int cmd_plugins_register(const std::vector<std::string>& command, const std::string& path) {
  if (command.empty()) throw Error(ErrorKind::kConfigInvalid, "plugins register needs --command");
  auto entries = load_plugin_entries(path);
  auto handle = spawn_plugin(command);
  const auto& d = handle->descriptor();
  for (const auto& e : entries) {
    if (e.id == d.id) {
      throw Error(ErrorKind::kDuplicateId, "plugin id already registered: " + d.id, d.id);
    }
  }
  if (Registry builtin = builtin_registry(); builtin.contains(d.id)) {
    throw Error(ErrorKind::kDuplicateId, "plugin id collides with a built-in extractor: " + d.id,
                d.id);
  }
  entries.push_back({d.id, command, d.features});
  handle->shutdown();
  save_plugin_entries(path, entries);
  std::cerr << "registered " << d.id << " (" << join(d.features, ", ") << ") in " << path << "\n";
  return kExitOk;
}

int cmd_plugins_list(const std::string& path) {
  Registry registry = builtin_registry();
  for (const auto& d : registry.list()) {
    std::cout << d.id << "\t" << to_string(d.kind) << "\t" << join(d.features, ",") << "\n";
  }
  for (const auto& e : load_plugin_entries(path)) {
    std::cout << e.id << "\t" << to_string(ExtractorKind::kExternal) << "\t"
              << join(e.features, ",") << "\t" << join(e.command, " ") << "\n";
  }
  return kExitOk;
}

int cmd_plugins_test(const std::vector<std::string>& command) {
  if (command.empty()) throw Error(ErrorKind::kConfigInvalid, "plugins test needs --command");
  fs::path dir = fs::temp_directory_path() / ("mirflex-plugin-test-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string wav = (dir / "tone.wav").string();
  const double freqs[] = {440.0};
  write_wav(wav, synth_tone(freqs, 1.0));

  auto checks = check_plugin_conformance(command, wav, kCanonicalSampleRate);
  std::error_code ec;
  fs::remove_all(dir, ec);

  bool all = true;
  for (const auto& c : checks) {
    all &= c.passed;
    std::cout << (c.passed ? "PASS  " : "FAIL  ") << c.rule << ": " << c.detail << "\n";
  }
  return all ? kExitOk : kExitPartial;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mirflex: modular music feature extraction"};
  app.require_subcommand(1);
  std::string registry_path = "mirflex-plugins.json";
  app.add_option("--registry", registry_path, "Plugin registry file");

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Run extractors over audio files");
  extract->add_option("--config", ex.config, "Pipeline config JSON");
  extract->add_option("--input", ex.inputs, "Input WAV files");
  extract->add_option("--extractors", ex.extractors, "Extractor ids");
  extract->add_option("--output", ex.output, "Report path (stdout when absent)");
  extract->add_option("--workers", ex.workers, "Worker threads")->check(CLI::PositiveNumber);
  extract->add_flag("--timing", ex.timing, "Store wall time in the report");

  std::string report_path, annotations_dir, eval_output;
  auto* eval = app.add_subcommand("eval", "Score a report against annotations");
  eval->add_option("--report", report_path, "Report JSON")->required();
  eval->add_option("--annotations", annotations_dir, "Directory of annotation JSON files")->required();
  eval->add_option("--output", eval_output, "Score table path (stdout when absent)");

  std::string task, format = "table";
  auto* catalog = app.add_subcommand("catalog", "Show the published candidate benchmarks");
  catalog->add_option("--task", task, "key, chord, tempo-beat, instrument or mood");
  catalog->add_option("--format", format)->check(CLI::IsMember({"table", "json"}));

  auto* plugins = app.add_subcommand("plugins", "Manage external extractors");
  plugins->require_subcommand(1);
  std::vector<std::string> command, trailing;
  auto* reg = plugins->add_subcommand("register", "Handshake with a plugin and record it");
  reg->add_option("--command", command, "Plugin executable and arguments");
  reg->add_option("args", trailing, "Plugin command after --");
  auto* list = plugins->add_subcommand("list", "List built-in and registered extractors");
  auto* test = plugins->add_subcommand("test", "Run the protocol conformance check");
  test->add_option("--command", command, "Plugin executable and arguments");
  test->add_option("args", trailing, "Plugin command after --");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  command.insert(command.end(), trailing.begin(), trailing.end());

  try {
    if (*extract) return cmd_extract(ex, registry_path);
    if (*eval) return cmd_eval(report_path, annotations_dir, eval_output);
    if (*catalog) return cmd_catalog(task, format);
    if (*reg) return cmd_plugins_register(command, registry_path);
    if (*list) return cmd_plugins_list(registry_path);
    if (*test) return cmd_plugins_test(command);
  } catch (const Error& e) {
    std::cerr << "mirflex: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
