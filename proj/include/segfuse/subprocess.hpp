// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace segfuse {

using Deadline = std::chrono::steady_clock::time_point;

/// A child process with piped stdin/stdout; stderr is inherited. Killed and reaped on
/// destruction if still running. Failures throw Error with PredictorCrash or Timeout.
class Subprocess {
 public:
  explicit Subprocess(const std::vector<std::string>& argv);
  ~Subprocess();

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  /// Given the bytes received so far, the total response length once it is known.
  using FrameSize = std::function<std::optional<std::size_t>(std::span<const std::uint8_t>)>;

  struct Received {
    std::vector<std::uint8_t> bytes;
    bool eof = false;
  };

  /// Writes `input` while reading stdout concurrently. Reading stops once `frame`
  /// reports a length that has been reached, or at end of stream; with no `frame`
  /// it reads to end of stream. `close_input` closes stdin after the last byte.
  Received exchange(std::span<const std::uint8_t> input, const FrameSize& frame, bool close_input, Deadline deadline);

  /// Waits for exit; returns the exit status (128 + signal for signalled exits).
  int wait(Deadline deadline);

  void kill() noexcept;
  pid_t pid() const noexcept { return pid_; }
  bool running() const noexcept { return pid_ > 0; }

 private:
  void close_stdin() noexcept;

  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::string name_;
};

}  // namespace segfuse
