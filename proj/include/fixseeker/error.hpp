#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fixseeker {

enum class ErrorCode {
  RepoNotFound,
  UnknownCommit,
  RootCommit,
  GitReadError,
  PathMissingOnSide,
  MalformedDiff,
  ParseFailure,
  BothEmpty,
  DanglingEdge,
  NodeSetMismatch,
  FormatVersionMismatch,
  CorruptGraph,
  EmptyCommit,
  EmptyKindSet,
  EmbedderFailure,
  ShapeMismatch,
  NonFiniteValue,
  ZeroClass,
  SingleClassTraining,
  InsufficientPool,
  SingleClass,
  NoPositives,
  CheckpointMismatch,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI batch loops in particular) can log and continue.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fixseeker
