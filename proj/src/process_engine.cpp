#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include <nlohmann/json.hpp>

#include "gostat/engine.hpp"

namespace gostat::engine {

ProcessEngine::ProcessEngine(std::string command, std::chrono::milliseconds timeout)
    : command_(std::move(command)), timeout_(timeout) {
  start();
}

ProcessEngine::~ProcessEngine() { stop(); }

void ProcessEngine::start() {
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw EngineError("pipe() failed", -1, false);
  pid_t pid = fork();
  if (pid < 0) throw EngineError("fork() failed", -1, false);
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  signal(SIGPIPE, SIG_IGN);
}

void ProcessEngine::stop(bool hung) {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  buffer_.clear();
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; !hung && i < 50; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      usleep(20000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::optional<std::string> ProcessEngine::read_reply(std::string_view id) {
  auto deadline = std::chrono::steady_clock::now() + timeout_;
  while (true) {
    for (auto nl = buffer_.find('\n'); nl != std::string::npos; nl = buffer_.find('\n')) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) continue;
      // warnings, stale replies to a timed-out query, and progress updates are skipped
      if (!j.contains("id") || j["id"] != id) continue;
      if (j.contains("warning") && !j.contains("rootInfo")) continue;
      if (j.value("isDuringSearch", false)) continue;
      return line;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd pfd{from_child_, POLLIN, 0};
    int rc = poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc == 0) return std::nullopt;
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw EngineError("poll() failed");
    }
    char chunk[65536];
    ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n <= 0) throw EngineError("engine process exited");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::string ProcessEngine::exchange(const std::string& request_line) {
  auto request = nlohmann::json::parse(request_line);
  std::string id = request.at("id").get<std::string>();
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string line = request_line + "\n";
    std::size_t off = 0;
    while (off < line.size()) {
      ssize_t n = write(to_child_, line.data() + off, line.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw EngineError("engine process closed its input");
      }
      off += static_cast<std::size_t>(n);
    }
    if (auto reply = read_reply(id)) return *reply;
    // a hung engine is replaced before retrying
    stop(true);
    start();
  }
  throw EngineError("engine timed out twice on query " + id);
}

std::unique_ptr<Engine> make_engine(std::string_view spec, std::map<std::string, MockEngine::Script> scripts,
                                    std::chrono::milliseconds timeout) {
  if (spec.starts_with("mock:")) {
    std::string_view args = spec.substr(5);
    std::optional<std::uint64_t> seed;
    if (args.starts_with("seed=")) {
      std::uint64_t s = 0;
      auto v = args.substr(5);
      auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
      if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument("bad mock seed in '" + std::string(spec) + "'");
      seed = s;
    } else if (!args.empty()) {
      throw std::invalid_argument("unknown mock engine option '" + std::string(args) + "'");
    }
    if (!seed && scripts.empty()) throw std::invalid_argument("mock engine needs seed=N or scripted games");
    return std::make_unique<MockEngine>(std::move(scripts), seed);
  }
  if (spec.starts_with("cmd:")) {
    std::string cmd(spec.substr(4));
    if (cmd.empty()) throw std::invalid_argument("empty engine command");
    return std::make_unique<ProcessEngine>(cmd, timeout);
  }
  throw std::invalid_argument("engine spec must be mock:seed=N or cmd:<command>, got '" + std::string(spec) + "'");
}

}  // namespace gostat::engine
