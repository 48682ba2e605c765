#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pnp {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
 public:
  GridMismatch() : Error("grid mismatch: operands live on different grids") {}
  explicit GridMismatch(const std::string& what) : Error(what) {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DomainTooSmall : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// Raised by an explicit step whose time step exceeds the stability bound.
class CflViolation : public Error {
 public:
  CflViolation(const std::string& what, double required_dt)
      : Error(what), required_dt_(required_dt) {}
  double required_dt() const noexcept { return required_dt_; }

 private:
  double required_dt_;
};

// Non-fatal conditions (boundary decay, coupling outside the small regime).
// Collected process-wide so that drivers can attach them to reports.
class WarningLog {
 public:
  static WarningLog& instance() {
    static WarningLog log;
    return log;
  }

  void emit(std::string message) {
    std::lock_guard lock(mutex_);
    if (echo_) std::cerr << "warning: " << message << '\n';
    messages_.push_back(std::move(message));
  }

  std::vector<std::string> drain() {
    std::lock_guard lock(mutex_);
    return std::exchange(messages_, {});
  }

  void set_echo(bool echo) {
    std::lock_guard lock(mutex_);
    echo_ = echo;
  }

 private:
  WarningLog() = default;
  std::mutex mutex_;
  std::vector<std::string> messages_;
  bool echo_ = false;
};

inline void warn(std::string message) { WarningLog::instance().emit(std::move(message)); }

}  // namespace pnp
