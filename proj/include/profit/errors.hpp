#pragma once

#include <stdexcept>
#include <string>

namespace profit {

// Error categories map to CLI exit codes: config 2, data 3, training 4,
// duplicate run 5.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct TrainError : Error {
  using Error::Error;
};

// pvp-core
struct PatternOverflow : TrainError {
  using TrainError::TrainError;
};
struct ArityMismatch : DataError {
  using DataError::DataError;
};
struct UnknownLabel : DataError {
  using DataError::DataError;
};
struct VerbalizerNotSingleToken : TrainError {
  using TrainError::TrainError;
};
struct EmptyBatch : TrainError {
  using TrainError::TrainError;
};

// model-backend
struct NoMask : TrainError {
  using TrainError::TrainError;
};
struct MultipleMasks : TrainError {
  using TrainError::TrainError;
};
struct ShapeMismatch : TrainError {
  using TrainError::TrainError;
};
struct EmptyCorpus : DataError {
  using DataError::DataError;
};

// data-hub
struct MissingFile : DataError {
  using DataError::DataError;
};
struct MalformedRow : DataError {
  using DataError::DataError;
};
struct LabelOutOfRange : DataError {
  using DataError::DataError;
};
struct InsufficientExamples : DataError {
  using DataError::DataError;
};
struct ConfigInvalid : ConfigError {
  using ConfigError::ConfigError;
};

// training-engine / eval-harness
struct EmptyDataset : DataError {
  using DataError::DataError;
};
struct OnlySourcePresent : DataError {
  using DataError::DataError;
};
struct EmptyStore : DataError {
  using DataError::DataError;
};
struct EmptyInput : DataError {
  using DataError::DataError;
};

// analysis
struct ZeroVariance : DataError {
  using DataError::DataError;
};
struct LengthMismatch : DataError {
  using DataError::DataError;
};
struct TooFewPoints : DataError {
  using DataError::DataError;
};
struct MissingFeature : DataError {
  using DataError::DataError;
};

// cli-runner
struct UnknownKey : ConfigError {
  using ConfigError::ConfigError;
};
struct TypeError : ConfigError {
  using ConfigError::ConfigError;
};
struct DuplicateRun : Error {
  using Error::Error;
};

}  // namespace profit
