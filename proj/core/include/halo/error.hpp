#pragma once

#include <stdexcept>
#include <string>

namespace halo {

enum class ErrorCode {
  InvalidArgument,
  InvalidNetlist,
  NonFinite,
  ShapeMismatch,
  IncompleteProfile,
  MalformedFile,
  EmptyCodebook,
  NoFeasibleLevel,
  UnmappedClass,
  TileTooLarge,
  TimingViolation,
  IndexOutOfBounds,
  Io,
};

const char* to_string(ErrorCode code);

// Every failure surfaced by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace halo
