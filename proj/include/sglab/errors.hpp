#pragma once

#include <stdexcept>
#include <string>

namespace sglab {

// Invalid user-supplied parameter or configuration value.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Scene/dataset construction could not satisfy its constraints.
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A requested legal-combination set is empty (e.g. Split B at ratio 1).
struct EmptySplitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem read/write failure; message carries the path.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// On-disk record failed validation; message carries the sample id.
struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value or failed numerical procedure.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sequence exceeds the model's configured capacity.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint and dataset disagree (vocabulary, shapes).
struct CompatibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sampling could not find enough attribute coverage.
struct CoverageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sglab
