#pragma once

#include <stdexcept>
#include <string>

namespace specdec {

// Base class for every error this library throws on a violated contract.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidDistribution : Error {
    using Error::Error;
};
struct AllZeroWeights : Error {
    using Error::Error;
};
struct NonPositiveTemperature : Error {
    using Error::Error;
};
struct CorpusTooShort : Error {
    using Error::Error;
};
struct MaskInDraft : Error {
    using Error::Error;
};
struct NonPositiveScore : Error {
    using Error::Error;
};
struct DivergedTraining : Error {
    using Error::Error;
};
struct ZeroProposalMass : Error {
    using Error::Error;
};
struct InstanceTooLarge : Error {
    using Error::Error;
};
struct MissingModel : Error {
    using Error::Error;
};
struct MissingCheckpoint : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace specdec
