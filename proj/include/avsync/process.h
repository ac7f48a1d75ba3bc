#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "avsync/error.h"

namespace avsync {

/// The child could not be started, or was killed after its deadline.
class ProcessError : public Error {
 public:
  ProcessError(const std::string& what, bool timed_out) : Error(what), timed_out_(timed_out) {}
  bool timed_out() const { return timed_out_; }

 private:
  bool timed_out_;
};

struct ProcessResult {
  int exit_code = 0;  // 128 + signal number when killed by a signal
  std::string stdout_text;
  std::string stderr_text;
};

/// Runs argv[0] (PATH lookup) with `input` on stdin and collects both output
/// streams. Throws ProcessError on spawn failure or timeout; a nonzero exit is
/// returned, not thrown.
ProcessResult run_process(const std::vector<std::string>& argv, const std::string& input = {},
                          std::optional<std::chrono::milliseconds> timeout = std::nullopt);

/// Whitespace split honouring single and double quotes.
std::vector<std::string> split_command(const std::string& command);

/// Joins argv for messages.
std::string join_command(const std::vector<std::string>& argv);

}  // namespace avsync
