#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sidforge {

enum class ErrorCode {
  DuplicateItem,
  MissingItem,
  CodeOutOfRange,
  BadSidLength,
  EmptyIndex,
  SidTooShort,
  UnknownItem,
  EmptyEvaluation,
  DimMismatch,
  GroupExceedsCapacity,
  ModelMismatch,
  BadInput,
  EmptyCorpus,
  RankTooHigh,
  RowMismatch,
  AllFiltered,
  Format,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateItem: return "DuplicateItem";
    case ErrorCode::MissingItem: return "MissingItem";
    case ErrorCode::CodeOutOfRange: return "CodeOutOfRange";
    case ErrorCode::BadSidLength: return "BadSidLength";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::SidTooShort: return "SidTooShort";
    case ErrorCode::UnknownItem: return "UnknownItem";
    case ErrorCode::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::GroupExceedsCapacity: return "GroupExceedsCapacity";
    case ErrorCode::ModelMismatch: return "ModelMismatch";
    case ErrorCode::BadInput: return "BadInput";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::RankTooHigh: return "RankTooHigh";
    case ErrorCode::RowMismatch: return "RowMismatch";
    case ErrorCode::AllFiltered: return "AllFiltered";
    case ErrorCode::Format: return "Format";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

// All library failures are reported through this exception. The code is the
// stable, machine-checkable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sidforge
