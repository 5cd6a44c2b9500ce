#pragma once

#include <sys/types.h>

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace mirflex::detail {

using Clock = std::chrono::steady_clock;

/// Child process with piped stdin/stdout; stderr is inherited.
class Subprocess {
 public:
  enum class ReadStatus { kLine, kTimeout, kEof, kTooLong };

  /// Throws Error(kSpawnFailed) when the executable cannot be started.
  explicit Subprocess(const std::vector<std::string>& argv);
  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  pid_t pid() const noexcept { return pid_; }

  /// False when the child's stdin is closed (broken pipe).
  bool write_all(std::string_view data);
  /// Reads one newline-terminated line (newline stripped) before the deadline.
  ReadStatus read_line(std::string& line, Clock::time_point deadline);
  void close_stdin();
  /// Waits for exit until the deadline; true once the child has been reaped.
  bool wait_exit(Clock::time_point deadline);
  /// SIGKILL and reap. No-op once reaped.
  void kill_now();
  bool reaped() const noexcept { return reaped_; }

  static constexpr std::size_t kMaxLineBytes = 64u << 20;

 private:
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  bool reaped_ = false;
  std::string buffer_;
};

}  // namespace mirflex::detail
