#pragma once

#include <stdexcept>
#include <string>

namespace epf {

enum class ErrorCode {
  // ingest
  MissingColumn,
  DuplicateCell,
  NonNumericValue,
  NonContiguousDates,
  MalformedDay,
  LeadingGap,
  TrailingGap,
  NonSolarPanel,
  // design
  WindowTooShort,
  SolarUnavailable,
  // estimate
  RankDeficient,
  InsufficientSample,
  NonPdPrior,
  DimensionMismatch,
  DofTooSmall,
  EmptyDensity,
  // backtest
  PlanOutOfRange,
  FitFailure,
  MisalignedRecords,
  // metrics
  EmptyErrors,
  NegativeSd,
  TooFewDraws,
  LengthMismatch,
  DegenerateLosses,
  DegenerateSeries,
  MisalignedRuns,
  // synthetic
  ExplosiveDgp,
  // cli / io
  ConfigError,
  IoError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateCell: return "DuplicateCell";
    case ErrorCode::NonNumericValue: return "NonNumericValue";
    case ErrorCode::NonContiguousDates: return "NonContiguousDates";
    case ErrorCode::MalformedDay: return "MalformedDay";
    case ErrorCode::LeadingGap: return "LeadingGap";
    case ErrorCode::TrailingGap: return "TrailingGap";
    case ErrorCode::NonSolarPanel: return "NonSolarPanel";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::SolarUnavailable: return "SolarUnavailable";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InsufficientSample: return "InsufficientSample";
    case ErrorCode::NonPdPrior: return "NonPdPrior";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DofTooSmall: return "DofTooSmall";
    case ErrorCode::EmptyDensity: return "EmptyDensity";
    case ErrorCode::PlanOutOfRange: return "PlanOutOfRange";
    case ErrorCode::FitFailure: return "FitFailure";
    case ErrorCode::MisalignedRecords: return "MisalignedRecords";
    case ErrorCode::EmptyErrors: return "EmptyErrors";
    case ErrorCode::NegativeSd: return "NegativeSd";
    case ErrorCode::TooFewDraws: return "TooFewDraws";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateLosses: return "DegenerateLosses";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::MisalignedRuns: return "MisalignedRuns";
    case ErrorCode::ExplosiveDgp: return "ExplosiveDgp";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Exit-code class for the CLI: config/validation problems vs numerical failures.
  bool is_config_error() const noexcept {
    switch (code_) {
      case ErrorCode::RankDeficient:
      case ErrorCode::InsufficientSample:
      case ErrorCode::NonPdPrior:
      case ErrorCode::DofTooSmall:
      case ErrorCode::FitFailure:
      case ErrorCode::DegenerateLosses:
      case ErrorCode::DegenerateSeries:
        return false;
      default:
        return true;
    }
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace epf
