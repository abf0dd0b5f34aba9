#pragma once

#include <stdexcept>
#include <string>

namespace fxvol {

/// Failure categories raised by the library. The CLI maps each category onto
/// a process exit code (see exit_code()).
enum class ErrorKind {
  Parse,
  Ordering,
  Io,
  Gap,
  Grid,
  Alignment,
  Coverage,
  Length,
  Dependency,
  Config,
  Domain,
  Stationarity,
  Numeric,
  Divergence,
  Rank,
  Optimizer,
  Degenerate,
  Singularity,
};

const char* to_string(ErrorKind kind) noexcept;

/// 1 = usage/config, 2 = data, 3 = numeric failure.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace fxvol
