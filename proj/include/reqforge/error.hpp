#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reqforge {

// Stable error identifiers. The CLI prints these on stderr next to the message.
enum class ErrorCode {
  Io,
  Parse,
  Validation,
  // dataset
  EmptyContext,
  TooFewRequirements,
  MixedProjects,
  EmptyDataset,
  // inference
  EndpointUnreachable,
  HttpStatus,
  Timeout,
  MalformedResponse,
  AllRequestsFailed,
  // similarity
  DimensionMismatch,
  EmptySide,
  ScorerFailed,
  ScoreCountMismatch,
  // lora
  ShapeMismatch,
  // stats
  DegenerateTable,
  ZeroExpected,
  EmptySample,
  AllZeroDifferences,
  InvalidArgument,
  // study
  LengthMismatch,
  DuplicateResponse,
  DomainViolation,
  MissingResponses,
  MissingBlindKey,
  UnknownStudy,
  Usage,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace reqforge
