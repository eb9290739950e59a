#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace depwsd {

enum class Errc {
  // conllu
  MalformedRow,
  BadHeadIndex,
  CycleDetected,
  MultipleRoots,
  NonContiguousIds,
  IndexOutOfRange,
  // embedstore
  EmptyRange,
  DimensionMismatch,
  AlignmentFailure,
  BadHeader,
  FloatParseError,
  MissingSepVector,
  // classify
  DegenerateLabels,
  NonFiniteLoss,
  NonFiniteInput,
  EmptyDataset,
  BadModelFile,
  // harness
  SpanOutOfBounds,
  MissingField,
  BadLabel,
  MissingArtifact,
  TargetNotInParse,
  InsufficientData,
  BadConfig,
  IoError,
};

constexpr std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::BadHeadIndex: return "BadHeadIndex";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::MultipleRoots: return "MultipleRoots";
    case Errc::NonContiguousIds: return "NonContiguousIds";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::EmptyRange: return "EmptyRange";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::AlignmentFailure: return "AlignmentFailure";
    case Errc::BadHeader: return "BadHeader";
    case Errc::FloatParseError: return "FloatParseError";
    case Errc::MissingSepVector: return "MissingSepVector";
    case Errc::DegenerateLabels: return "DegenerateLabels";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::BadModelFile: return "BadModelFile";
    case Errc::SpanOutOfBounds: return "SpanOutOfBounds";
    case Errc::MissingField: return "MissingField";
    case Errc::BadLabel: return "BadLabel";
    case Errc::MissingArtifact: return "MissingArtifact";
    case Errc::TargetNotInParse: return "TargetNotInParse";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::BadConfig: return "BadConfig";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure the library reports carries one of the codes above so the
/// CLI can emit a structured message and tests can match on the kind.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace depwsd
