#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <sys/types.h>

#include "rare/pool.hpp"

namespace rare {

/// Black-box simulator access: returns f(y_l) for an augmented input.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual double evaluate(const AugmentedInput& input) = 0;
};

class FunctionOracle : public Oracle {
 public:
  explicit FunctionOracle(std::function<double(const AugmentedInput&)> fn) : fn_(std::move(fn)) {}
  double evaluate(const AugmentedInput& input) override { return fn_(input); }

 private:
  std::function<double(const AugmentedInput&)> fn_;
};

/// Precomputed values read from a CSV with header `point_index,level,f`.
class CsvOracle : public Oracle {
 public:
  static CsvOracle load(const std::string& path);
  explicit CsvOracle(std::map<AugmentedInput, double> values) : values_(std::move(values)) {}

  double evaluate(const AugmentedInput& input) override;
  std::optional<double> lookup(const AugmentedInput& input) const;
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::map<AugmentedInput, double> values_;
};

/// Line protocol with a child process: `EVAL <point_index> <level>\n` on its
/// stdin, answered by `OK <float>\n` or `ERR <message>\n` on its stdout.
/// One child; requests are serialized.
class ExternalOracle : public Oracle {
 public:
  ExternalOracle(std::vector<std::string> argv,
                 std::chrono::milliseconds timeout = std::chrono::seconds(300));
  ~ExternalOracle() override;
  ExternalOracle(const ExternalOracle&) = delete;
  ExternalOracle& operator=(const ExternalOracle&) = delete;

  double evaluate(const AugmentedInput& input) override;

 private:
  std::string read_line(const std::string& request);
  void shutdown();

  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::mutex mutex_;
};

/// Split a command line on whitespace, honouring single and double quotes.
std::vector<std::string> split_command(const std::string& command);

}  // namespace rare
