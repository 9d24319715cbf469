#include "topobench/tool.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <system_error>

#include "topobench/error.hpp"

namespace topobench {

namespace {

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset();
    fd_ = std::exchange(o.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  int get() const { return fd_; }

 private:
  int fd_ = -1;
};

struct ScratchDir {
  std::filesystem::path path;
  bool owned = false;
  ~ScratchDir() {
    if (owned) {
      std::error_code ec;
      std::filesystem::remove_all(path, ec);
    }
  }
};

ScratchDir prepare_dir(const std::filesystem::path& requested) {
  ScratchDir dir;
  std::error_code ec;
  if (!requested.empty()) {
    std::filesystem::create_directories(requested, ec);
    if (ec || !std::filesystem::is_directory(requested)) {
      throw SandboxUnavailable("cannot prepare working directory " + requested.string());
    }
    dir.path = requested;
    return dir;
  }
  auto tmpl = (std::filesystem::temp_directory_path(ec) / "topobench-tool-XXXXXX").string();
  if (::mkdtemp(tmpl.data()) == nullptr) throw SandboxUnavailable("mkdtemp failed");
  dir.path = tmpl;
  dir.owned = true;
  return dir;
}

void append_capped(std::string& dst, const char* data, std::size_t n, std::size_t& budget, bool& truncated) {
  const auto take = std::min(n, budget);
  dst.append(data, take);
  budget -= take;
  if (take < n) truncated = true;
}

}  // namespace

ToolResult execute_tool(std::string_view command, double cap_seconds, const ToolOptions& options) {
  if (!(cap_seconds > 0.0) || cap_seconds > kMaxToolCapSeconds) {
    throw ConfigError("tool cap must be in (0, 300] seconds");
  }
  const ScratchDir dir = prepare_dir(options.working_dir);

  int out_pipe[2];
  int err_pipe[2];
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) throw SandboxUnavailable("pipe failed");
  Fd out_r(out_pipe[0]), out_w(out_pipe[1]);
  if (::pipe2(err_pipe, O_CLOEXEC) != 0) throw SandboxUnavailable("pipe failed");
  Fd err_r(err_pipe[0]), err_w(err_pipe[1]);

  const std::string cmd(command);
  const std::string cwd = dir.path.string();
  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw SandboxUnavailable("fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(out_w.get(), STDOUT_FILENO);
    ::dup2(err_w.get(), STDERR_FILENO);
    const int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    if (::chdir(cwd.c_str()) != 0) ::_exit(126);
    ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  out_w.reset();
  err_w.reset();

  ToolResult result;
  std::size_t budget = options.output_cap;
  const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(cap_seconds));
  std::array<char, 8192> buf{};
  bool out_open = true;
  bool err_open = true;
  bool exited = false;
  int wstatus = 0;

  while (out_open || err_open || !exited) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      ::kill(-pid, SIGKILL);
      result.status = ToolStatus::timeout;
      break;
    }
    if (!exited) {
      const pid_t w = ::waitpid(pid, &wstatus, WNOHANG);
      if (w == pid) exited = true;
    }
    if (exited && !out_open && !err_open) break;

    std::array<pollfd, 2> fds{};
    nfds_t n = 0;
    if (out_open) fds[n++] = {out_r.get(), POLLIN, 0};
    if (err_open) fds[n++] = {err_r.get(), POLLIN, 0};
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    // Once the shell has exited, only drain what is already buffered.
    const int wait_ms = exited ? 0 : static_cast<int>(std::clamp<long long>(left, 1, 50));
    const int ready = n > 0 ? ::poll(fds.data(), n, wait_ms) : 0;
    if (ready < 0 && errno != EINTR) break;
    if (n == 0 && !exited) {
      ::usleep(5000);
      continue;
    }
    bool progressed = false;
    for (nfds_t i = 0; i < n; ++i) {
      if ((fds[i].revents & (POLLIN | POLLHUP | POLLERR)) == 0) continue;
      const auto got = ::read(fds[i].fd, buf.data(), buf.size());
      const bool is_out = fds[i].fd == out_r.get();
      if (got <= 0) {
        (is_out ? out_open : err_open) = false;
        continue;
      }
      progressed = true;
      append_capped(is_out ? result.stdout_text : result.stderr_text, buf.data(), static_cast<std::size_t>(got),
                    budget, result.truncated);
    }
    if (exited && !progressed) break;
  }

  // Reap the shell and anything left in its group.
  ::kill(-pid, SIGKILL);
  if (!exited) ::waitpid(pid, &wstatus, 0);
  result.duration = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.duration = std::min(result.duration, cap_seconds);
  if (result.status == ToolStatus::timeout) {
    result.exit_status = -1;
  } else if (WIFEXITED(wstatus)) {
    result.exit_status = WEXITSTATUS(wstatus);
  } else {
    result.exit_status = -1;
  }
  return result;
}

}  // namespace topobench
