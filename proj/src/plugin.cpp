#include "mirflex/plugin.h"

#include <chrono>
#include <fstream>
#include <sstream>

#include "subprocess.h"

namespace mirflex {
namespace {

using detail::Clock;
using detail::Subprocess;

Clock::time_point deadline_after(double seconds) {
  return Clock::now() + std::chrono::duration_cast<Clock::duration>(
                            std::chrono::duration<double>(seconds));
}

std::string line_of(const Json& message) { return message.dump() + "\n"; }

std::string excerpt(const std::string& line) {
  constexpr std::size_t kMax = 200;
  return line.size() <= kMax ? line : line.substr(0, kMax) + "...";
}

// Outcome of waiting for one protocol message.
struct Incoming {
  Subprocess::ReadStatus status;
  std::string line;
  Json message;  // object when status == kLine and the line parsed
  bool parsed = false;
};

Incoming receive(Subprocess& process, Clock::time_point deadline) {
  Incoming in;
  in.status = process.read_line(in.line, deadline);
  if (in.status != Subprocess::ReadStatus::kLine) return in;
  try {
    in.message = Json::parse(in.line);
    in.parsed = in.message.is_object();
  } catch (const Json::exception&) {
    in.parsed = false;
  }
  return in;
}

std::vector<std::string> string_array(const Json& value) {
  std::vector<std::string> out;
  if (!value.is_array()) throw std::invalid_argument("not an array");
  for (const auto& item : value) {
    if (!item.is_string() || item.get<std::string>().empty()) {
      throw std::invalid_argument("not a non-empty string");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::string type_of(const Json& message) {
  auto it = message.find("type");
  return it != message.end() && it->is_string() ? it->get<std::string>() : std::string();
}

}  // namespace

const char* to_string(PluginState state) {
  switch (state) {
    case PluginState::kIdle: return "idle";
    case PluginState::kBusy: return "busy";
    case PluginState::kDead: return "dead";
  }
  return "unknown";
}

PluginHandle::PluginHandle(std::vector<std::string> command, PluginOptions options)
    : command_(std::move(command)), options_(options) {}

PluginHandle::~PluginHandle() { shutdown(); }

PluginState PluginHandle::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

int PluginHandle::pid() const {
  std::lock_guard lock(mutex_);
  return process_ && !process_->reaped() ? process_->pid() : -1;
}

bool PluginHandle::shutdown_forced() const {
  std::lock_guard lock(mutex_);
  return forced_;
}

void PluginHandle::fail_dead(ErrorKind kind, const std::string& message,
                             const std::string& detail) {
  state_ = PluginState::kDead;
  if (process_) process_->kill_now();
  throw Error(kind, descriptor_.id + ": " + message, detail);
}

std::unique_ptr<PluginHandle> spawn_plugin(std::vector<std::string> command,
                                           PluginOptions options) {
  if (!(options.timeout_sec > 0.0) || !(options.shutdown_grace_sec >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "plugin timeouts must be positive");
  }
  std::unique_ptr<PluginHandle> handle(new PluginHandle(std::move(command), options));
  handle->process_ = std::make_unique<Subprocess>(handle->command_);
  auto& process = *handle->process_;
  const std::string& exe = handle->command_.front();

  auto violation = [&](const std::string& why, const std::string& line) -> Error {
    process.kill_now();
    handle->state_ = PluginState::kDead;
    return Error(ErrorKind::kProtocolViolation,
                 exe + ": " + why + (line.empty() ? "" : ": '" + excerpt(line) + "'"), line);
  };

  if (!process.write_all(line_of({{"type", "hello"}, {"version", kPluginProtocolVersion}}))) {
    process.kill_now();
    handle->state_ = PluginState::kDead;
    throw Error(ErrorKind::kSpawnFailed, exe + ": plugin exited before the handshake", exe);
  }

  Incoming in = receive(process, deadline_after(options.timeout_sec));
  switch (in.status) {
    case Subprocess::ReadStatus::kTimeout:
      process.kill_now();
      handle->state_ = PluginState::kDead;
      throw Error(ErrorKind::kHandshakeTimeout,
                  exe + ": no capabilities reply within " + std::to_string(options.timeout_sec) +
                      " s");
    case Subprocess::ReadStatus::kEof:
      throw violation("plugin closed its output before replying to hello", "");
    case Subprocess::ReadStatus::kTooLong:
      throw violation("handshake line too long", "");
    case Subprocess::ReadStatus::kLine:
      break;
  }
  if (!in.parsed) throw violation("first message is not a JSON object", in.line);
  if (type_of(in.message) != "capabilities") {
    throw violation("first message is not capabilities", in.line);
  }
  if (auto v = in.message.find("version");
      v != in.message.end() && !(v->is_number_integer() && *v == kPluginProtocolVersion)) {
    throw violation("unsupported protocol version", in.line);
  }

  ExtractorDescriptor d;
  d.kind = ExtractorKind::kExternal;
  d.version = "protocol-" + std::to_string(kPluginProtocolVersion);
  auto prefix = in.message.find("id_prefix");
  if (prefix == in.message.end() || !prefix->is_string() || prefix->get<std::string>().empty()) {
    throw violation("capabilities lacks a non-empty id_prefix", in.line);
  }
  d.id = prefix->get<std::string>();
  try {
    d.features = string_array(in.message.value("features", Json()));
  } catch (const std::invalid_argument&) {
    throw violation("capabilities features must be an array of names", in.line);
  }
  if (d.features.empty()) throw violation("capabilities lists no features", in.line);
  handle->descriptor_ = std::move(d);
  return handle;
}

std::vector<FeatureRecord> PluginHandle::analyze(const std::string& audio_path,
                                                 int sample_rate_hz, const ParamMap& params) {
  std::lock_guard lock(mutex_);
  if (state_ == PluginState::kDead) {
    throw Error(ErrorKind::kDeadHandle, descriptor_.id + ": plugin handle is dead");
  }
  state_ = PluginState::kBusy;
  const long long id = next_id_++;

  Json request = {{"type", "analyze"},
                  {"id", id},
                  {"audio_path", audio_path},
                  {"sample_rate", sample_rate_hz},
                  {"params", Json::object()}};
  for (const auto& [k, v] : params) request["params"][k] = v;
  if (!process_->write_all(line_of(request))) {
    fail_dead(ErrorKind::kBrokenPipe, "plugin stdin closed");
  }

  Incoming in = receive(*process_, deadline_after(options_.timeout_sec));
  switch (in.status) {
    case Subprocess::ReadStatus::kTimeout:
      fail_dead(ErrorKind::kTimeout, "no reply to request " + std::to_string(id) + " within " +
                                         std::to_string(options_.timeout_sec) + " s");
    case Subprocess::ReadStatus::kEof:
      fail_dead(ErrorKind::kBrokenPipe, "plugin output closed during request " +
                                            std::to_string(id));
    case Subprocess::ReadStatus::kTooLong:
      fail_dead(ErrorKind::kProtocolViolation, "reply line too long");
    case Subprocess::ReadStatus::kLine:
      break;
  }
  if (!in.parsed) {
    fail_dead(ErrorKind::kProtocolViolation, "reply is not a JSON object: '" + excerpt(in.line) + "'",
              in.line);
  }
  auto reply_id = in.message.find("id");
  if (reply_id == in.message.end() || !reply_id->is_number_integer() ||
      reply_id->get<long long>() != id) {
    fail_dead(ErrorKind::kProtocolViolation,
              "reply id does not answer request " + std::to_string(id) + ": '" +
                  excerpt(in.line) + "'",
              in.line);
  }

  const std::string type = type_of(in.message);
  if (type == "error") {
    state_ = PluginState::kIdle;
    auto msg = in.message.find("message");
    throw Error(ErrorKind::kPluginError,
                descriptor_.id + ": " +
                    (msg != in.message.end() && msg->is_string() ? msg->get<std::string>()
                                                                 : std::string("unspecified")));
  }
  if (type != "result") {
    fail_dead(ErrorKind::kProtocolViolation, "unexpected message type '" + type + "'", in.line);
  }
  auto records = in.message.find("records");
  if (records == in.message.end() || !records->is_array()) {
    state_ = PluginState::kIdle;
    throw Error(ErrorKind::kPluginBadRecord, descriptor_.id + ": result without records array",
                "records");
  }

  std::vector<FeatureRecord> out;
  for (Json r : *records) {
    if (!r.is_object()) {
      state_ = PluginState::kIdle;
      throw Error(ErrorKind::kPluginBadRecord, descriptor_.id + ": record is not an object",
                  "record");
    }
    if (!r.contains("extractor_id")) r["extractor_id"] = descriptor_.id;
    try {
      out.push_back(record_from_json(r));
    } catch (const Error& e) {
      state_ = PluginState::kIdle;
      throw Error(ErrorKind::kPluginBadRecord,
                  descriptor_.id + ": invalid record field '" + e.detail() + "'", e.detail());
    }
    if (out.back().extractor_id != descriptor_.id) {
      state_ = PluginState::kIdle;
      throw Error(ErrorKind::kPluginBadRecord,
                  descriptor_.id + ": record claims extractor id '" + out.back().extractor_id + "'",
                  "extractor_id");
    }
  }
  state_ = PluginState::kIdle;
  return out;
}

void PluginHandle::shutdown() {
  std::lock_guard lock(mutex_);
  if (!process_ || process_->reaped()) {
    state_ = PluginState::kDead;
    return;
  }
  process_->write_all(line_of({{"type", "shutdown"}}));
  process_->close_stdin();
  forced_ = !process_->wait_exit(deadline_after(options_.shutdown_grace_sec));
  if (forced_) process_->kill_now();
  state_ = PluginState::kDead;
}

namespace {

// One live process per registered plugin, shared by every worker's adapter.
class PluginSession {
 public:
  PluginSession(std::unique_ptr<PluginHandle> handle, std::vector<std::string> command,
                PluginOptions options)
      : handle_(std::move(handle)), command_(std::move(command)), options_(options) {}

  std::vector<FeatureRecord> analyze(const std::string& path, int sample_rate,
                                     const ParamMap& params) {
    std::lock_guard lock(mutex_);
    if (!handle_ || handle_->state() == PluginState::kDead) {
      std::string id = handle_ ? handle_->descriptor().id : std::string();
      handle_.reset();
      auto fresh = spawn_plugin(command_, options_);
      if (fresh->descriptor().id != id) {
        throw Error(ErrorKind::kProtocolViolation,
                    "respawned plugin changed its id from '" + id + "' to '" +
                        fresh->descriptor().id + "'");
      }
      handle_ = std::move(fresh);
    }
    return handle_->analyze(path, sample_rate, params);
  }

 private:
  std::mutex mutex_;
  std::unique_ptr<PluginHandle> handle_;
  std::vector<std::string> command_;
  PluginOptions options_;
};

class PluginExtractor final : public Extractor {
 public:
  PluginExtractor(std::shared_ptr<PluginSession> session, ParamMap params)
      : session_(std::move(session)), params_(std::move(params)) {}

  std::vector<FeatureRecord> extract(AnalysisContext& ctx) override {
    if (ctx.source_path().empty()) {
      throw Error(ErrorKind::kInvalidArgument, "external extractors need a file path");
    }
    return session_->analyze(ctx.source_path(), ctx.audio().sample_rate_hz(), params_);
  }

 private:
  std::shared_ptr<PluginSession> session_;
  ParamMap params_;
};

}  // namespace

const ExtractorDescriptor& register_plugin(Registry& registry, std::vector<std::string> command,
                                           PluginOptions options) {
  auto handle = spawn_plugin(command, options);
  ExtractorDescriptor descriptor = handle->descriptor();
  if (registry.contains(descriptor.id)) {
    throw Error(ErrorKind::kDuplicateId, "extractor id already registered: " + descriptor.id,
                descriptor.id);
  }
  auto session = std::make_shared<PluginSession>(std::move(handle), std::move(command), options);
  return registry.register_extractor(
      std::move(descriptor), [session](const ParamMap& params) -> std::unique_ptr<Extractor> {
        for (const auto& [k, v] : params) {
          if (!v.is_primitive() || v.is_null()) {
            throw Error(ErrorKind::kConfigInvalid, "plugin parameter '" + k + "' is not a scalar",
                        k);
          }
        }
        return std::make_unique<PluginExtractor>(session, params);
      });
}

std::vector<PluginEntry> load_plugin_entries(const std::string& path) {
  std::ifstream in(path);
  if (!in) return {};
  std::stringstream ss;
  ss << in.rdbuf();
  Json root = parse_json(ss.str());
  std::vector<PluginEntry> out;
  try {
    for (const auto& p : root.at("plugins")) {
      out.push_back({p.at("id").get<std::string>(), string_array(p.at("command")),
                     string_array(p.at("features"))});
    }
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kParseError, path + ": malformed plugin registry: " + e.what());
  }
  return out;
}

void save_plugin_entries(const std::string& path, const std::vector<PluginEntry>& entries) {
  Json list = Json::array();
  for (const auto& e : entries) {
    list.push_back({{"id", e.id}, {"command", e.command}, {"features", e.features}});
  }
  write_text_file(path, Json{{"plugins", list}}.dump(2) + "\n");
}

std::vector<ConformanceCheck> check_plugin_conformance(const std::vector<std::string>& command,
                                                       const std::string& audio_path,
                                                       int sample_rate_hz, PluginOptions options) {
  std::vector<ConformanceCheck> checks;
  auto add = [&](std::string rule, bool ok, std::string detail) {
    checks.push_back({std::move(rule), ok, std::move(detail)});
  };

  std::unique_ptr<PluginHandle> handle;
  try {
    handle = spawn_plugin(command, options);
    const auto& d = handle->descriptor();
    std::string features;
    for (const auto& f : d.features) features += (features.empty() ? "" : ",") + f;
    add("handshake", true, "id " + d.id + ", features " + features);
  } catch (const Error& e) {
    add("handshake", false, e.what());
    for (const char* rule : {"analyze", "records", "error-reply", "shutdown"}) {
      add(rule, false, "skipped: no handshake");
    }
    return checks;
  }

  try {
    auto records = handle->analyze(audio_path, sample_rate_hz);
    add("analyze", true, std::to_string(records.size()) + " record(s)");
    add("records", !records.empty(), records.empty() ? "result carried no records" : "valid");
  } catch (const Error& e) {
    bool bad_record = e.kind() == ErrorKind::kPluginBadRecord;
    add("analyze", bad_record, bad_record ? "reply received" : e.what());
    add("records", false, e.what());
  }

  try {
    handle->analyze(audio_path + ".does-not-exist", sample_rate_hz);
    add("error-reply", false, "missing file produced a result");
  } catch (const Error& e) {
    add("error-reply", e.kind() == ErrorKind::kPluginError, e.what());
  }

  handle->shutdown();
  add("shutdown", !handle->shutdown_forced(),
      handle->shutdown_forced() ? "force-killed after grace period" : "exited cleanly");
  return checks;
}

}  // namespace mirflex
