#pragma once

#include <stdexcept>
#include <string>

namespace dcpa {

// Shape/geometry violations (bad extents, mismatched operands).
struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Bad or missing external data: files, manifests, rasters, checkpoints.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite ones are required (NaN loss/gradient).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid run/loss/sampler/model configuration.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace dcpa
