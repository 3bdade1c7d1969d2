#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace streamreg {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- configuration / request problems (CLI exit code 2) ------------------

struct UsageError : Error {
  using Error::Error;
};

struct DimensionMismatch : UsageError {
  using UsageError::UsageError;
};

struct ArityMismatch : UsageError {
  using UsageError::UsageError;
};

struct UnderIdentified : UsageError {
  using UsageError::UsageError;
};

struct NegativeLambda : UsageError {
  using UsageError::UsageError;
};

struct TooFewFolds : UsageError {
  using UsageError::UsageError;
};

// --- data problems (CLI exit code 3) --------------------------------------

struct DataError : Error {
  using Error::Error;
};

struct IoError : DataError {
  using DataError::DataError;
};

struct EmptyFile : DataError {
  using DataError::DataError;
};

struct MissingColumn : DataError {
  using DataError::DataError;
};

struct ParseError : DataError {
  ParseError(const std::string& what, std::int64_t row, std::string column)
      : DataError(what), row(row), column(std::move(column)) {}
  std::int64_t row;   // 1-based data-row index (header not counted)
  std::string column;
};

struct StreamChanged : DataError {
  using DataError::DataError;
};

struct NonBinaryOutcome : DataError {
  using DataError::DataError;
};

struct NegativeWeight : DataError {
  using DataError::DataError;
};

struct UnbalancedPanel : DataError {
  using DataError::DataError;
};

struct TooManyGroups : DataError {
  using DataError::DataError;
};

struct UnknownGroup : DataError {
  using DataError::DataError;
};

// --- numeric problems (CLI exit code 4) ------------------------------------

struct NumericError : Error {
  using Error::Error;
};

struct RankDeficient : NumericError {
  using NumericError::NumericError;
};

struct InsufficientObservations : NumericError {
  using NumericError::NumericError;
};

struct NotConverged : NumericError {
  using NumericError::NumericError;
};

struct TooFewGroups : NumericError {
  using NumericError::NumericError;
};

struct AllReplicatesSingular : NumericError {
  using NumericError::NumericError;
};

}  // namespace streamreg
