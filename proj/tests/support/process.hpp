#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace yesql::test {

struct ProcessResult {
  int exit_code = -1;  // -signal when killed
  std::string out;
  std::string err;
  std::chrono::milliseconds elapsed{0};
};

/// Runs argv[0] with the given arguments, feeding `input` to stdin.
ProcessResult run_process(const std::vector<std::string>& argv, const std::string& input = {},
                          std::chrono::seconds timeout = std::chrono::seconds(120));

/// A child whose output goes to files; used where the test must kill it.
class ChildProcess {
 public:
  ChildProcess(const std::vector<std::string>& argv, const std::string& stdout_file,
               const std::string& stderr_file);
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  int pid() const noexcept { return pid_; }
  void kill(int signal);
  /// Exit code, -signal when killed, nullopt on timeout.
  std::optional<int> wait(std::chrono::milliseconds timeout);

 private:
  int pid_ = -1;
  std::optional<int> status_;
};

std::string crawler_binary();

}  // namespace yesql::test
