#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mirflex/error.h"
#include "mirflex/framework.h"

namespace mirflex {

namespace detail {
class Subprocess;
}

inline constexpr int kPluginProtocolVersion = 1;

struct PluginOptions {
  /// Limit for the handshake and for each analyze reply.
  double timeout_sec = 60.0;
  /// Time a plugin gets to exit after a shutdown message before SIGKILL.
  double shutdown_grace_sec = 5.0;
};

enum class PluginState { kIdle, kBusy, kDead };
const char* to_string(PluginState state);

/// Host side of one external extractor process speaking the line protocol:
/// newline-delimited JSON on the plugin's stdin/stdout, stderr passed through.
///
/// One request at a time. analyze() and shutdown() serialize on an internal
/// mutex, so shutdown() issued while a request is in flight waits for it.
class PluginHandle {
 public:
  ~PluginHandle();
  PluginHandle(const PluginHandle&) = delete;
  PluginHandle& operator=(const PluginHandle&) = delete;

  const ExtractorDescriptor& descriptor() const noexcept { return descriptor_; }
  const std::vector<std::string>& command() const noexcept { return command_; }
  const PluginOptions& options() const noexcept { return options_; }
  PluginState state() const;
  /// Process id of the plugin; -1 once reaped.
  int pid() const;

  /// Errors: PluginError and PluginBadRecord leave the handle idle; Timeout,
  /// BrokenPipe and ProtocolViolation kill the plugin and mark it dead;
  /// DeadHandle when already dead.
  std::vector<FeatureRecord> analyze(const std::string& audio_path, int sample_rate_hz,
                                     const ParamMap& params = {});

  /// Idempotent. Sends the shutdown message, waits for exit, kills after the
  /// grace period.
  void shutdown();
  /// True when the last shutdown had to kill the process.
  bool shutdown_forced() const;

 private:
  friend std::unique_ptr<PluginHandle> spawn_plugin(std::vector<std::string>, PluginOptions);
  PluginHandle(std::vector<std::string> command, PluginOptions options);

  [[noreturn]] void fail_dead(ErrorKind kind, const std::string& message,
                              const std::string& detail = "");

  std::vector<std::string> command_;
  PluginOptions options_;
  ExtractorDescriptor descriptor_;
  std::unique_ptr<detail::Subprocess> process_;
  PluginState state_ = PluginState::kIdle;
  long long next_id_ = 1;
  bool forced_ = false;
  mutable std::mutex mutex_;
};

/// Starts the plugin and performs the handshake. Errors: SpawnFailed,
/// HandshakeTimeout, ProtocolViolation (detail holds the offending line).
std::unique_ptr<PluginHandle> spawn_plugin(std::vector<std::string> command,
                                           PluginOptions options = {});

/// Spawns the plugin, registers its descriptor (kind external) and keeps the
/// process for reuse across files. Pipeline workers share that one process;
/// requests are serialized. A dead plugin is respawned on the next request.
const ExtractorDescriptor& register_plugin(Registry& registry, std::vector<std::string> command,
                                           PluginOptions options = {});

/// Entry of the persisted plugin registry file.
struct PluginEntry {
  std::string id;
  std::vector<std::string> command;
  std::vector<std::string> features;

  bool operator==(const PluginEntry&) const = default;
};

/// Missing file reads as empty. ParseError on malformed content.
std::vector<PluginEntry> load_plugin_entries(const std::string& path);
void save_plugin_entries(const std::string& path, const std::vector<PluginEntry>& entries);

struct ConformanceCheck {
  std::string rule;
  bool passed = false;
  std::string detail;
};

/// Handshake, one analyze of `audio_path`, an error round trip on a missing
/// file, and a clean shutdown. Later rules are skipped (failed) when the
/// handshake fails.
std::vector<ConformanceCheck> check_plugin_conformance(const std::vector<std::string>& command,
                                                       const std::string& audio_path,
                                                       int sample_rate_hz,
                                                       PluginOptions options = {});

}  // namespace mirflex
