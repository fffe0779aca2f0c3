#pragma once

#include <stdexcept>
#include <string>

namespace ema {

enum class ErrorCode {
  EmptyRound,
  DimensionMismatch,
  DuplicateClient,
  NonFiniteValue,
  SampleTooSmall,
  InvalidWeight,
  AllFiltered,
  TrimTooAggressive,
  TooFewClients,
  OracleFailure,
  ConstantSample,
  SampleSizeOutOfRange,
  UnsupportedAlpha,
  TooFewSamples,
  EmptyDataset,
  InvalidConfig,
  IoError,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyRound: return "EmptyRound";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateClient: return "DuplicateClient";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::SampleTooSmall: return "SampleTooSmall";
    case ErrorCode::InvalidWeight: return "InvalidWeight";
    case ErrorCode::AllFiltered: return "AllFiltered";
    case ErrorCode::TrimTooAggressive: return "TrimTooAggressive";
    case ErrorCode::TooFewClients: return "TooFewClients";
    case ErrorCode::OracleFailure: return "OracleFailure";
    case ErrorCode::ConstantSample: return "ConstantSample";
    case ErrorCode::SampleSizeOutOfRange: return "SampleSizeOutOfRange";
    case ErrorCode::UnsupportedAlpha: return "UnsupportedAlpha";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

/// Library-wide exception carrying a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ema
