#include "fxvol/error.hpp"

namespace fxvol {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Ordering: return "ordering error";
    case ErrorKind::Io: return "io error";
    case ErrorKind::Gap: return "gap error";
    case ErrorKind::Grid: return "grid error";
    case ErrorKind::Alignment: return "alignment error";
    case ErrorKind::Coverage: return "coverage error";
    case ErrorKind::Length: return "length error";
    case ErrorKind::Dependency: return "dependency error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Stationarity: return "stationarity error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Divergence: return "divergence error";
    case ErrorKind::Rank: return "rank error";
    case ErrorKind::Optimizer: return "optimizer error";
    case ErrorKind::Degenerate: return "degenerate error";
    case ErrorKind::Singularity: return "singularity error";
  }
  return "error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config:
      return 1;
    case ErrorKind::Parse:
    case ErrorKind::Ordering:
    case ErrorKind::Io:
    case ErrorKind::Gap:
    case ErrorKind::Grid:
    case ErrorKind::Alignment:
    case ErrorKind::Coverage:
    case ErrorKind::Length:
    case ErrorKind::Dependency:
      return 2;
    default:
      return 3;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace fxvol
