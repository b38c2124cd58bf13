#pragma once

#include <stdexcept>
#include <string>

namespace prtransx {

// Error taxonomy shared across the library and the CLI. The CLI maps each
// class to a distinct process exit code (see tools/main.cpp).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An expected upstream artifact (file) is absent.
struct MissingInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A file exists but its contents do not match the declared schema.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A symbolic entity/relation token failed to resolve to an id.
struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Duplicate (h,r,t) with conflicting data while grouping.
struct DuplicateTripletError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Negative sampling exhausted its candidate pool.
struct SamplingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Visit extraction hit an inconsistent record.
struct ExtractionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Checkpoint file is corrupt or does not match expectations.
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A loss value or parameter became non-finite during training.
struct NonFiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace prtransx
