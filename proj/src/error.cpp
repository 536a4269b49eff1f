#include "fixseeker/error.hpp"

namespace fixseeker {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::RepoNotFound: return "RepoNotFound";
    case ErrorCode::UnknownCommit: return "UnknownCommit";
    case ErrorCode::RootCommit: return "RootCommit";
    case ErrorCode::GitReadError: return "GitReadError";
    case ErrorCode::PathMissingOnSide: return "PathMissingOnSide";
    case ErrorCode::MalformedDiff: return "MalformedDiff";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::BothEmpty: return "BothEmpty";
    case ErrorCode::DanglingEdge: return "DanglingEdge";
    case ErrorCode::NodeSetMismatch: return "NodeSetMismatch";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::CorruptGraph: return "CorruptGraph";
    case ErrorCode::EmptyCommit: return "EmptyCommit";
    case ErrorCode::EmptyKindSet: return "EmptyKindSet";
    case ErrorCode::EmbedderFailure: return "EmbedderFailure";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::ZeroClass: return "ZeroClass";
    case ErrorCode::SingleClassTraining: return "SingleClassTraining";
    case ErrorCode::InsufficientPool: return "InsufficientPool";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::CheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace fixseeker
