#pragma once

#include <stdexcept>
#include <string>

namespace cian {

// Base class for all library errors. The CLI maps these onto exit codes:
// usage problems exit 1, everything below exits 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct InvariantError : Error { using Error::Error; };

// A word shorter than a convolution filter width; callers pad instead.
struct WordTooShortError : DimensionError { using DimensionError::DimensionError; };

// Empty or whitespace-only sentence, or an all-masked pooling request.
struct EmptySentenceError : DataError { using DataError::DataError; };

// Operation requested on a model variant that does not support it.
struct UnsupportedVariantError : ConfigError { using ConfigError::ConfigError; };

}  // namespace cian
