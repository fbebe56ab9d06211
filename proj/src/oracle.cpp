#include "rare/oracle.hpp"

#include <cctype>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fstream>
#include <thread>

#include <poll.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "rare/errors.hpp"
#include "rare/util.hpp"

namespace rare {

CsvOracle CsvOracle::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open oracle file " + path);
  std::map<AugmentedInput, double> values;
  std::string line;
  int lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      if (trim(line) != "point_index,level,f")
        throw ConfigError(lineno, path + ": expected header point_index,level,f");
      continue;
    }
    auto fields = split(line, ',');
    if (fields.size() != 3) throw ConfigError(lineno, path + ": expected 3 fields");
    try {
      long point = parse_long(fields[0]);
      long level = parse_long(fields[1]);
      double f = parse_double(fields[2]);
      if (point < 0 || level < 0) throw InvalidInput("negative index");
      AugmentedInput key{static_cast<std::size_t>(point), static_cast<std::size_t>(level)};
      if (!values.emplace(key, f).second) throw InvalidInput("duplicate entry");
    } catch (const InvalidInput& e) {
      throw ConfigError(lineno, path + ": " + e.what());
    }
  }
  return CsvOracle(std::move(values));
}

std::optional<double> CsvOracle::lookup(const AugmentedInput& input) const {
  auto it = values_.find(input);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double CsvOracle::evaluate(const AugmentedInput& input) {
  if (auto v = lookup(input)) return *v;
  throw OracleError("no precomputed value for point " + std::to_string(input.point) + " level " +
                    std::to_string(input.level));
}

ExternalOracle::ExternalOracle(std::vector<std::string> argv, std::chrono::milliseconds timeout)
    : argv_(std::move(argv)), timeout_(timeout) {
  if (argv_.empty()) throw InvalidInput("external oracle needs a command");
  int fds[2];
  if (socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0)
    throw OracleError(std::string("socketpair failed: ") + std::strerror(errno));
  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);
  pid_ = fork();
  if (pid_ < 0) {
    close(fds[0]);
    close(fds[1]);
    throw OracleError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid_ == 0) {
    close(fds[0]);
    dup2(fds[1], STDIN_FILENO);
    dup2(fds[1], STDOUT_FILENO);
    if (fds[1] > STDOUT_FILENO) close(fds[1]);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(fds[1]);
  to_child_ = fds[0];
  from_child_ = fds[0];
}

ExternalOracle::~ExternalOracle() { shutdown(); }

void ExternalOracle::shutdown() {
  if (to_child_ >= 0) {
    close(to_child_);
    to_child_ = from_child_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

namespace {

std::string exit_description(pid_t pid) {
  int status = 0;
  pid_t r = -1;
  for (int i = 0; i < 100 && r != pid; ++i) {
    r = waitpid(pid, &status, WNOHANG);
    if (r != pid) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  if (r != pid) return "closed its output";
  if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "was killed by signal " + std::to_string(WTERMSIG(status));
  return "stopped";
}

}  // namespace

std::string ExternalOracle::read_line(const std::string& request) {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      kill(pid_, SIGKILL);
      shutdown();
      throw OracleTimeout("oracle request '" + request + "' timed out after " +
                          std::to_string(timeout_.count()) + " ms");
    }
    pollfd p{from_child_, POLLIN, 0};
    int rc = poll(&p, 1, static_cast<int>(std::min<long long>(left.count(), 1000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw OracleError(std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) continue;
    char chunk[4096];
    ssize_t got = read(from_child_, chunk, sizeof(chunk));
    if (got < 0) {
      if (errno == EINTR) continue;
      got = 0;
    }
    if (got == 0) {
      std::string why = exit_description(pid_);
      pid_ = -1;
      shutdown();
      throw OracleExited("oracle process " + why + " during request '" + request + "'");
    }
    buffer_.append(chunk, static_cast<std::size_t>(got));
  }
}

double ExternalOracle::evaluate(const AugmentedInput& input) {
  std::lock_guard lock(mutex_);
  const std::string request = "EVAL " + std::to_string(input.point) + " " + std::to_string(input.level);
  if (to_child_ < 0) throw OracleExited("oracle process is not running; request '" + request + "'");
  const std::string wire = request + "\n";
  std::size_t sent = 0;
  while (sent < wire.size()) {
    ssize_t n = send(to_child_, wire.data() + sent, wire.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      std::string why = exit_description(pid_);
      pid_ = -1;
      shutdown();
      throw OracleExited("oracle process " + why + " before request '" + request + "'");
    }
    sent += static_cast<std::size_t>(n);
  }
  const std::string line = read_line(request);
  if (line.rfind("OK ", 0) == 0) {
    try {
      return parse_double(line.substr(3));
    } catch (const InvalidInput&) {
      throw OracleProtocolError("malformed value in response '" + line + "' to request '" + request + "'");
    }
  }
  if (line.rfind("ERR", 0) == 0 && (line.size() == 3 || line[3] == ' '))
    throw OracleError(line.size() > 4 ? line.substr(4) : std::string("unspecified error"));
  throw OracleProtocolError("malformed response '" + line + "' to request '" + request + "'");
}

std::vector<std::string> split_command(const std::string& command) {
  std::vector<std::string> out;
  std::string cur;
  bool have = false;
  char quote = 0;
  for (char c : command) {
    if (quote) {
      if (c == quote)
        quote = 0;
      else
        cur += c;
    } else if (c == '\'' || c == '"') {
      quote = c;
      have = true;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (have) out.push_back(cur);
      cur.clear();
      have = false;
    } else {
      cur += c;
      have = true;
    }
  }
  if (quote) throw InvalidInput("unterminated quote in command");
  if (have) out.push_back(cur);
  return out;
}

}  // namespace rare
