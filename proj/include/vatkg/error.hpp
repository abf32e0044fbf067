#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vatkg {

enum class Errc {
  InvalidArgument,
  ConfigError,
  // embed-index
  DimMismatch,
  ZeroVector,
  ZeroDim,
  NonFinite,
  DuplicateId,
  EmptyEntries,
  InvalidK,
  // persistence
  IoError,
  BadMagic,
  ChecksumMismatch,
  SchemaVersionMismatch,
  SchemaError,
  InvariantViolation,
  // kg-core
  EmptyCandidateList,
  TooManyCandidates,
  CandidateConflict,
  UnknownConcept,
  UnknownSample,
  UnknownTriplet,
  DuplicateTriplet,
  DescriptionIndexOutOfRange,
  // pipeline
  WrongTagCount,
  ZeroFrames,
  ManifestParseError,
  EmptyCompletion,
  NoCandidatesParsed,
  AllSourcesFailed,
  // clients
  LlmUnavailable,
  EncoderUnavailable,
  UnscriptedPrompt,
  Unreachable,
  BadStatus,
  Unsupported,
  // rag
  UnknownModality,
  MissingDescription,
};

std::string_view errc_name(Errc code) noexcept;

/// Library-wide exception. Carries a machine-checkable code plus a chain of
/// context tags (stage name, sample id, endpoint) added as it propagates.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  /// Outermost tag first.
  const std::vector<std::string>& context() const noexcept { return context_; }

  /// Returns a copy tagged with an extra outer context (e.g. "encode").
  Error annotated(std::string tag) const;

 private:
  static std::string render(Errc code, const std::vector<std::string>& context,
                            const std::string& message);

  Errc code_;
  std::string message_;
  std::vector<std::string> context_;
};

/// True for failures that mean a remote or mocked service could not answer.
bool is_unavailable(Errc code) noexcept;

}  // namespace vatkg
