#include "seld/error.hpp"

namespace seld {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_direction: return "invalid-direction";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::format: return "format";
    case ErrorKind::range: return "range";
    case ErrorKind::generation: return "generation";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::usage: return "usage";
    case ErrorKind::shape: return "shape";
    case ErrorKind::training_divergence: return "training-divergence";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
    case ErrorKind::compatibility: return "compatibility";
    case ErrorKind::provider: return "provider";
  }
  return "unknown";
}

bool is_validation(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_direction:
    case ErrorKind::invalid_input:
    case ErrorKind::empty_input:
    case ErrorKind::format:
    case ErrorKind::range:
    case ErrorKind::configuration:
    case ErrorKind::usage:
    case ErrorKind::shape:
    case ErrorKind::parse:
    case ErrorKind::compatibility:
      return true;
    default:
      return false;
  }
}

}  // namespace seld
