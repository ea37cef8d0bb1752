#ifndef GSR_CORE_ERROR_HPP
#define GSR_CORE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gsr {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad generator / run configuration (e.g. HR side not divisible by the scale).
struct ConfigError : Error {
    using Error::Error;
};

// Value outside its documented domain (coordinates, step indices, ranges).
struct DomainError : Error {
    using Error::Error;
};

// Tensor/matrix shape disagreement.
struct ShapeError : Error {
    using Error::Error;
};

// Tag or token not present in the fixed vocabulary.
struct VocabError : Error {
    using Error::Error;
};

// Attention called with an empty key set; callers substitute the null token.
struct EmptyKeyError : Error {
    using Error::Error;
};

// A required artifact (checkpoint, dataset) is missing.
struct DependencyError : Error {
    using Error::Error;
};

// Dataset files missing, truncated or failing their checksum.
struct CorruptDatasetError : Error {
    using Error::Error;
};

// Train/eval split overlap detected via manifest ids.
struct ContaminationError : Error {
    using Error::Error;
};

}  // namespace gsr

#endif
