#include "probfp/error.hpp"

namespace probfp {

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::Validation:
      return 2;
    case ErrorKind::Unsupported:
      return 3;
    case ErrorKind::Resource:
    case ErrorKind::Timeout:
      return 4;
    case ErrorKind::NonFinite:
      return 5;
    case ErrorKind::SweepExhausted:
      return 6;
    case ErrorKind::Infeasible:
    case ErrorKind::Internal:
      break;
  }
  return 1;
}

Deadline::Deadline(double seconds) : armed_(true) {
  using namespace std::chrono;
  if (seconds <= 0) {
    end_ = steady_clock::now();
  } else {
    end_ = steady_clock::now() + duration_cast<steady_clock::duration>(duration<double>(seconds));
  }
}

bool Deadline::expired() const { return armed_ && std::chrono::steady_clock::now() >= end_; }

}  // namespace probfp
