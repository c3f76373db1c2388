#pragma once

#include <stdexcept>
#include <string>

namespace waveshape {

// Raised for malformed or unusable input data (CSV problems, datasets that
// violate a training precondition). Maps to exit code 3 in the CLI.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a numeric procedure blows up (non-finite weights during
// training). Maps to exit code 4 in the CLI.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace waveshape
