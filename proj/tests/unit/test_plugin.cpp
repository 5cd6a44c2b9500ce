#include <doctest.h>

#include <chrono>

#include <signal.h>

#include "corpus.h"
#include "mirflex/error.h"
#include "mirflex/plugin.h"

using namespace mirflex;
using namespace mirflex::testing;

namespace {

std::vector<std::string> fixture(const std::string& mode, const std::string& arg = "") {
  std::vector<std::string> cmd{MIRFLEX_FIXTURE_PLUGIN, mode};
  if (!arg.empty()) cmd.push_back(arg);
  return cmd;
}

const PluginOptions kQuick{.timeout_sec = 3.0, .shutdown_grace_sec = 0.5};

Error caught(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("no exception");
  return Error(ErrorKind::kInvalidArgument, "unreachable");
}

struct Wav {
  TempDir dir{"mirflex-plugin-unit"};
  std::string path = dir.file("tone.wav");
  Wav() { write_wav(path, synth_tone(std::vector<double>{440.0}, 1.5)); }
};

}  // namespace

TEST_SUITE("plugin") {

TEST_CASE("echo round trip") {
  Wav wav;
  auto h = spawn_plugin(fixture("echo"), kQuick);
  CHECK(h->descriptor().id == "echo-fixture");
  CHECK(h->descriptor().kind == ExtractorKind::kExternal);
  CHECK(h->descriptor().features == std::vector<std::string>{"echo"});
  CHECK(h->state() == PluginState::kIdle);
  CHECK(h->pid() > 0);
  for (int i = 0; i < 3; ++i) {
    auto recs = h->analyze(wav.path, 22050);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].extractor_id == "echo-fixture");
    CHECK(recs[0].end_sec == doctest::Approx(1.5));
    CHECK(recs[0].label == "echo");
  }
  h->shutdown();
  CHECK_FALSE(h->shutdown_forced());
  CHECK(h->pid() == -1);
  CHECK(h->state() == PluginState::kDead);
  h->shutdown();
  CHECK(caught([&] { h->analyze(wav.path, 22050); }).kind() == ErrorKind::kDeadHandle);
}

TEST_CASE("handshake failures") {
  auto violation = [](const std::string& mode) {
    return caught([&] { spawn_plugin(fixture(mode), kQuick); });
  };
  for (const char* mode : {"garbage", "wrong-first", "version", "no-features"}) {
    CAPTURE(mode);
    auto e = violation(mode);
    CHECK(e.kind() == ErrorKind::kProtocolViolation);
  }
  CHECK(violation("garbage").detail() == "this is not json");
  CHECK(violation("exit-early").kind() == ErrorKind::kProtocolViolation);

  auto start = std::chrono::steady_clock::now();
  CHECK(caught([] { spawn_plugin(fixture("silent"), {.timeout_sec = 0.5, .shutdown_grace_sec = 0.5}); })
            .kind() == ErrorKind::kHandshakeTimeout);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(3));

  auto missing = caught([] { spawn_plugin({"/nonexistent/plugin-binary"}, kQuick); });
  CHECK(missing.kind() == ErrorKind::kSpawnFailed);
  CHECK(missing.detail() == "/nonexistent/plugin-binary");
  CHECK(caught([] { spawn_plugin({}, kQuick); }).kind() == ErrorKind::kSpawnFailed);
}

TEST_CASE("error replies keep the handle usable") {
  Wav wav;
  auto h = spawn_plugin(fixture("error"), kQuick);
  auto e = caught([&] { h->analyze(wav.path, 22050); });
  CHECK(e.kind() == ErrorKind::kPluginError);
  CHECK(std::string(e.what()).find("cannot read audio") != std::string::npos);
  CHECK(h->state() == PluginState::kIdle);
  CHECK(caught([&] { h->analyze(wav.path, 22050); }).kind() == ErrorKind::kPluginError);

  auto echo = spawn_plugin(fixture("echo"), kQuick);
  CHECK(caught([&] { echo->analyze(wav.path + ".missing", 22050); }).kind() == ErrorKind::kPluginError);
  CHECK(echo->analyze(wav.path, 22050).size() == 1);
}

TEST_CASE("invalid records name the field") {
  Wav wav;
  for (const char* field : {"confidence", "start_sec", "end_sec", "label", "feature", "latent",
                            "extractor_id", "metadata"}) {
    CAPTURE(field);
    auto h = spawn_plugin(fixture("bad-record", field), kQuick);
    auto e = caught([&] { h->analyze(wav.path, 22050); });
    CHECK(e.kind() == ErrorKind::kPluginBadRecord);
    CHECK(e.detail() == field);
    CHECK(h->state() == PluginState::kIdle);
  }
}

TEST_CASE("transport failures kill the handle") {
  Wav wav;
  {
    auto h = spawn_plugin(fixture("die-on-analyze"), kQuick);
    CHECK(caught([&] { h->analyze(wav.path, 22050); }).kind() == ErrorKind::kBrokenPipe);
    CHECK(h->state() == PluginState::kDead);
    CHECK(caught([&] { h->analyze(wav.path, 22050); }).kind() == ErrorKind::kDeadHandle);
  }
  {
    auto h = spawn_plugin(fixture("slow", "10"), {.timeout_sec = 0.5, .shutdown_grace_sec = 0.5});
    auto start = std::chrono::steady_clock::now();
    CHECK(caught([&] { h->analyze(wav.path, 22050); }).kind() == ErrorKind::kTimeout);
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(3));
    CHECK(h->state() == PluginState::kDead);
    CHECK(h->pid() == -1);
  }
  for (const char* mode : {"wrong-id", "duplicate-id"}) {
    CAPTURE(mode);
    auto h = spawn_plugin(fixture(mode), kQuick);
    if (std::string(mode) == "duplicate-id") CHECK(h->analyze(wav.path, 22050).size() == 1);
    CHECK(caught([&] { h->analyze(wav.path, 22050); }).kind() == ErrorKind::kProtocolViolation);
    CHECK(h->state() == PluginState::kDead);
  }
}

TEST_CASE("stubborn plugins are killed after the grace period") {
  auto h = spawn_plugin(fixture("ignore-shutdown"), {.timeout_sec = 3.0, .shutdown_grace_sec = 0.3});
  auto start = std::chrono::steady_clock::now();
  h->shutdown();
  CHECK(h->shutdown_forced());
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(3));
  CHECK(h->pid() == -1);
}

TEST_CASE("destructor shuts the plugin down") {
  int pid = 0;
  {
    auto h = spawn_plugin(fixture("echo"), kQuick);
    pid = h->pid();
  }
  CHECK(pid > 0);
  CHECK(::kill(pid, 0) == -1);
}

TEST_CASE("registered plugins run inside the pipeline") {
  TempDir dir;
  std::vector<std::string> inputs;
  for (int i = 0; i < 4; ++i) {
    inputs.push_back(dir.file("in" + std::to_string(i) + ".wav"));
    write_wav(inputs.back(), synth_tone(std::vector<double>{440.0}, 1.0 + i));
  }
  Registry reg = builtin_registry();
  const auto& desc = register_plugin(reg, fixture("echo"), kQuick);
  CHECK(desc.id == "echo-fixture");
  CHECK(reg.descriptor("echo-fixture").kind == ExtractorKind::kExternal);
  CHECK(caught([&] { register_plugin(reg, fixture("echo"), kQuick); }).kind() == ErrorKind::kDuplicateId);

  PipelineConfig cfg;
  cfg.input_paths = inputs;
  cfg.enabled_extractors = {{"echo-fixture", {}}};
  cfg.workers = 3;
  auto rep = run_pipeline(cfg, reg);
  CHECK_FALSE(rep.has_errors());
  for (int i = 0; i < 4; ++i) {
    REQUIRE(rep.files[i].records.size() == 1);
    CHECK(rep.files[i].records[0].end_sec == doctest::Approx(1.0 + i));
  }

  cfg.enabled_extractors = {{"echo-fixture", {{"nested", Json::array()}}}};
  CHECK(caught([&] { run_pipeline(cfg, reg); }).kind() == ErrorKind::kConfigInvalid);
}

TEST_CASE("a crashed plugin is respawned for the next file") {
  TempDir dir;
  write_wav(dir.file("a.wav"), synth_tone(std::vector<double>{440.0}, 1.0));
  write_wav(dir.file("b.wav"), synth_tone(std::vector<double>{440.0}, 1.0));
  Registry reg;
  register_plugin(reg, fixture("die-on-analyze"), kQuick);
  PipelineConfig cfg;
  cfg.input_paths = {dir.file("a.wav"), dir.file("b.wav")};
  cfg.enabled_extractors = {{"echo-fixture", {}}};
  auto rep = run_pipeline(cfg, reg);
  // Each file gets its own fresh process, and its own BrokenPipe.
  for (const auto& f : rep.files) {
    REQUIRE(f.errors.size() == 1);
    CHECK(f.errors[0].extractor_id == "echo-fixture");
    CHECK_FALSE(f.failed());
  }
  CHECK(rep.processed == 2);
}

TEST_CASE("plugin registry file") {
  TempDir dir;
  auto path = dir.file("plugins.json");
  CHECK(load_plugin_entries(path).empty());
  std::vector<PluginEntry> entries{{"a", {"/bin/a", "--x"}, {"f1"}}, {"b", {"/bin/b"}, {"f2", "f3"}}};
  save_plugin_entries(path, entries);
  CHECK(load_plugin_entries(path) == entries);
  write_text_file(path, "{\"plugins\": 7}");
  CHECK(caught([&] { load_plugin_entries(path); }).kind() == ErrorKind::kParseError);
}

TEST_CASE("conformance checker") {
  Wav wav;
  auto rules = [](const std::vector<ConformanceCheck>& checks) {
    std::map<std::string, bool> out;
    for (const auto& c : checks) out[c.rule] = c.passed;
    return out;
  };
  auto good = rules(check_plugin_conformance(fixture("echo"), wav.path, 22050, kQuick));
  CHECK(good == std::map<std::string, bool>{{"analyze", true}, {"error-reply", true},
                                            {"handshake", true}, {"records", true},
                                            {"shutdown", true}});
  auto bad = rules(check_plugin_conformance(fixture("bad-record", "label"), wav.path, 22050, kQuick));
  CHECK(bad["handshake"]);
  CHECK_FALSE(bad["records"]);
  auto dead = rules(check_plugin_conformance(fixture("garbage"), wav.path, 22050, kQuick));
  CHECK_FALSE(dead["handshake"]);
  CHECK_FALSE(dead["shutdown"]);
  auto stubborn = rules(check_plugin_conformance(fixture("ignore-shutdown"), wav.path, 22050,
                                                 {.timeout_sec = 3.0, .shutdown_grace_sec = 0.3}));
  CHECK(stubborn["analyze"]);
  CHECK_FALSE(stubborn["shutdown"]);
}

}  // TEST_SUITE
