#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace trapmorph {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid user-facing configuration (bad scenario file, bad parameters).
struct ConfigError : Error {
    using Error::Error;
};

/// Two fields on incompatible grids were combined.
struct GridMismatchError : Error {
    using Error::Error;
};

/// A numerical operation failed (empty trust window, non-finite values, ...).
/// Carries the designer slice index when the failure happened inside a protocol.
struct NumericError : Error {
    explicit NumericError(const std::string& what, std::optional<int> slice_index = std::nullopt)
        : Error(slice_index ? what + " [slice " + std::to_string(*slice_index) + "]" : what),
          slice(slice_index) {}

    std::optional<int> slice;
};

}  // namespace trapmorph
