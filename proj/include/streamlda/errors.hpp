#pragma once

#include <stdexcept>
#include <string>

namespace streamlda {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define STREAMLDA_DEFINE_ERROR(Name)       \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  };

// numerics
STREAMLDA_DEFINE_ERROR(RegularizedNotSpd)
STREAMLDA_DEFINE_ERROR(NotSpd)
STREAMLDA_DEFINE_ERROR(InsufficientSamples)

// slda / baselines
STREAMLDA_DEFINE_ERROR(DimensionMismatch)
STREAMLDA_DEFINE_ERROR(LabelOutOfRange)
STREAMLDA_DEFINE_ERROR(NoClassesSeen)
STREAMLDA_DEFINE_ERROR(EmptyBatch)
STREAMLDA_DEFINE_ERROR(EmptyBank)

// orderings
STREAMLDA_DEFINE_ERROR(MissingMetadata)
STREAMLDA_DEFINE_ERROR(SpecTooLarge)
STREAMLDA_DEFINE_ERROR(ScheduleError)

// evaluation
STREAMLDA_DEFINE_ERROR(LengthMismatch)
STREAMLDA_DEFINE_ERROR(ZeroOffline)

// dataio
STREAMLDA_DEFINE_ERROR(BadMagic)
STREAMLDA_DEFINE_ERROR(VersionUnsupported)
STREAMLDA_DEFINE_ERROR(TruncatedPayload)
STREAMLDA_DEFINE_ERROR(NonFiniteFeature)
STREAMLDA_DEFINE_ERROR(RaggedRow)
STREAMLDA_DEFINE_ERROR(UnparsableNumber)
STREAMLDA_DEFINE_ERROR(UnknownColumn)
STREAMLDA_DEFINE_ERROR(BadShape)

// cli / config
STREAMLDA_DEFINE_ERROR(ConfigError)
STREAMLDA_DEFINE_ERROR(IoError)

#undef STREAMLDA_DEFINE_ERROR

}  // namespace streamlda
