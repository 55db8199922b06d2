#pragma once

#include <chrono>
#include <stdexcept>
#include <string>

namespace probfp {

enum class ErrorKind {
  Parse,
  Validation,
  Unsupported,
  Resource,
  NonFinite,  // reported as "DZ"
  Infeasible,
  SweepExhausted,
  Timeout,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// process exit status for each error category
[[nodiscard]] int exit_code(ErrorKind kind) noexcept;

// Wall-clock budget polled from long loops. A default-constructed deadline never fires.
class Deadline {
 public:
  Deadline() = default;
  explicit Deadline(double seconds);

  [[nodiscard]] bool expired() const;
  void check() const {
    if (armed_ && expired()) throw Error(ErrorKind::Timeout, "time budget exhausted");
  }

 private:
  bool armed_ = false;
  std::chrono::steady_clock::time_point end_{};
};

}  // namespace probfp
