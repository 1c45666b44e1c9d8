// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include "segfuse/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>

#include "segfuse/error.hpp"

extern char** environ;

namespace segfuse {
namespace {

void ignore_sigpipe() {
  // A predictor that exits early must surface as EPIPE, not kill this process.
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

int remaining_ms(Deadline deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
  return static_cast<int>(std::clamp<long long>(left.count(), 0, 1 << 30));
}

[[noreturn]] void crash(const std::string& name, const std::string& what) {
  throw Error(Errc::PredictorCrash, "predictor '" + name + "': " + what);
}

}  // namespace

Subprocess::Subprocess(const std::vector<std::string>& argv) {
  if (argv.empty()) throw Error(Errc::PredictorError, "empty predictor command");
  ignore_sigpipe();
  name_ = argv.front();

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) crash(name_, std::string("pipe: ") + std::strerror(errno));
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    crash(name_, std::string("pipe: ") + std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> args;
  for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = -1;
  int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    crash(name_, std::string("cannot launch: ") + std::strerror(rc));
  }
  pid_ = pid;
  stdin_fd_ = in_pipe[1];
  stdout_fd_ = out_pipe[0];
  ::fcntl(stdin_fd_, F_SETFL, ::fcntl(stdin_fd_, F_GETFL) | O_NONBLOCK);
  ::fcntl(stdout_fd_, F_SETFL, ::fcntl(stdout_fd_, F_GETFL) | O_NONBLOCK);
}

Subprocess::~Subprocess() {
  close_stdin();
  if (stdout_fd_ >= 0) ::close(stdout_fd_);
  if (pid_ > 0) {
    // Give a well-behaved child a moment to exit on stdin EOF before killing it.
    for (int i = 0; i < 50; ++i) {
      int status = 0;
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    kill();
  }
}

void Subprocess::close_stdin() noexcept {
  if (stdin_fd_ >= 0) {
    ::close(stdin_fd_);
    stdin_fd_ = -1;
  }
}

Subprocess::Received Subprocess::exchange(std::span<const std::uint8_t> input, const FrameSize& frame,
                                          bool close_input, Deadline deadline) {
  Received out;
  std::size_t written = 0;
  if (input.empty() && close_input) close_stdin();
  std::vector<std::uint8_t> chunk(1 << 16);

  auto done = [&] {
    if (written < input.size()) return false;
    if (!frame) return out.eof;
    auto need = frame(out.bytes);
    return out.eof || (need && out.bytes.size() >= *need);
  };

  while (!done()) {
    pollfd fds[2];
    nfds_t count = 0;
    int in_slot = -1;
    int out_slot = -1;
    if (written < input.size()) {
      if (stdin_fd_ < 0) crash(name_, "stdin already closed");
      fds[count] = {stdin_fd_, POLLOUT, 0};
      in_slot = static_cast<int>(count++);
    }
    if (!out.eof) {
      fds[count] = {stdout_fd_, POLLIN, 0};
      out_slot = static_cast<int>(count++);
    }
    int timeout = remaining_ms(deadline);
    if (timeout == 0) {
      kill();
      throw Error(Errc::Timeout, "predictor '" + name_ + "' timed out");
    }
    int rc = ::poll(fds, count, timeout);
    if (rc < 0) {
      if (errno == EINTR) continue;
      crash(name_, std::string("poll: ") + std::strerror(errno));
    }
    if (rc == 0) continue;

    if (in_slot >= 0 && (fds[in_slot].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t n = ::write(stdin_fd_, input.data() + written, input.size() - written);
      if (n < 0) {
        if (errno != EAGAIN && errno != EINTR) {
          kill();
          crash(name_, std::string("broken input stream: ") + std::strerror(errno));
        }
      } else {
        written += static_cast<std::size_t>(n);
        if (written == input.size() && close_input) close_stdin();
      }
    }
    if (out_slot >= 0 && (fds[out_slot].revents & (POLLIN | POLLERR | POLLHUP))) {
      std::size_t cap = chunk.size();
      if (frame) {
        // Never read past the current frame: the next one belongs to a later call.
        if (auto need = frame(out.bytes); need && *need > out.bytes.size())
          cap = std::min(cap, *need - out.bytes.size());
      }
      ssize_t n = ::read(stdout_fd_, chunk.data(), cap);
      if (n < 0) {
        if (errno != EAGAIN && errno != EINTR) crash(name_, std::string("read: ") + std::strerror(errno));
      } else if (n == 0) {
        out.eof = true;
        if (written < input.size()) {
          kill();
          crash(name_, "closed its output before consuming the request");
        }
      } else {
        out.bytes.insert(out.bytes.end(), chunk.begin(), chunk.begin() + n);
      }
    }
  }
  return out;
}

int Subprocess::wait(Deadline deadline) {
  if (pid_ <= 0) return -1;
  close_stdin();
  for (;;) {
    int status = 0;
    pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      pid_ = -1;
      if (WIFEXITED(status)) return WEXITSTATUS(status);
      if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
      return -1;
    }
    if (r < 0 && errno != EINTR) {
      pid_ = -1;
      return -1;
    }
    if (remaining_ms(deadline) == 0) {
      kill();
      throw Error(Errc::Timeout, "predictor '" + name_ + "' did not exit in time");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
}

void Subprocess::kill() noexcept {
  if (pid_ <= 0) return;
  ::kill(pid_, SIGKILL);
  int status = 0;
  while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
  }
  pid_ = -1;
}

}  // namespace segfuse
