#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psminobs {

enum class ErrorCode {
  RaggedRow,
  CodeOutOfRange,
  NoVariables,
  InvalidIndex,
  InvalidArgument,
  Overflow,
  CombinatorialCap,
  MissingEmptySet,
  CountMismatch,
  UnknownParent,
  DuplicateParent,
  ParseError,
  CyclicStructure,
  AllWorkersFailed,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::CodeOutOfRange: return "CodeOutOfRange";
    case ErrorCode::NoVariables: return "NoVariables";
    case ErrorCode::InvalidIndex: return "InvalidIndex";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::CombinatorialCap: return "CombinatorialCap";
    case ErrorCode::MissingEmptySet: return "MissingEmptySet";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::UnknownParent: return "UnknownParent";
    case ErrorCode::DuplicateParent: return "DuplicateParent";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::CyclicStructure: return "CyclicStructure";
    case ErrorCode::AllWorkersFailed: return "AllWorkersFailed";
  }
  return "Unknown";
}

// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace psminobs
