#pragma once

#include <stdexcept>
#include <string>

namespace irsynth {

// Coarse failure category; the CLI maps each to a distinct exit code.
enum class ErrorKind {
  invalid_argument,  // bad value supplied by the caller
  io,                // missing / unreadable / unwritable file
  format,            // file exists but its contents are unusable
  validation,        // dataset or manifest inconsistency
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline std::string to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::io: return "io";
    case ErrorKind::format: return "format";
    case ErrorKind::validation: return "validation";
  }
  return "unknown";
}

}  // namespace irsynth
