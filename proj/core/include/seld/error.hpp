#pragma once

#include <stdexcept>
#include <string>

namespace seld {

/// Failure categories surfaced by the library. The CLI maps `validation`
/// kinds to exit code 2 and everything else to exit code 3.
enum class ErrorKind {
  invalid_direction,
  invalid_input,
  empty_input,
  format,
  range,
  generation,
  capacity,
  configuration,
  usage,
  shape,
  training_divergence,
  parse,
  io,
  compatibility,
  provider,
};

const char* to_string(ErrorKind kind) noexcept;

/// True for errors caused by bad user input or configuration.
bool is_validation(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace seld
