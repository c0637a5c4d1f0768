#pragma once

#include <stdexcept>
#include <string>

namespace driftbench {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape disagreement between operands; message names both shapes.
struct DimensionError : Error {
    using Error::Error;
};

// Malformed input file (JSONL, config, checkpoint).
struct ParseError : Error {
    using Error::Error;
};

// Structurally valid input violating the declared schema (unknown label, bad field type).
struct SchemaError : Error {
    using Error::Error;
};

// Invalid configuration value or strategy/option mismatch.
struct ConfigError : Error {
    using Error::Error;
};

// A chronological split produced an empty partition; message names it.
struct SplitError : Error {
    using Error::Error;
};

// Operation not available for the given model kind (e.g. attention weights
// requested from a bag-of-embeddings encoder).
struct UnsupportedError : Error {
    using Error::Error;
};

}  // namespace driftbench
