#pragma once

#include <stdexcept>
#include <string>

namespace exaug {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A caller violated a precondition (non-finite value, bad range, ...).
struct InvalidInput : Error {
    explicit InvalidInput(const std::string& what) : Error(what) {}
};

/// Raster or vector dimensions do not agree.
struct ShapeError : Error {
    explicit ShapeError(const std::string& what) : Error(what) {}
};

/// fill_blanks was asked to interpolate an image with zero filled pixels.
struct EmptySynthesis : Error {
    explicit EmptySynthesis(const std::string& what) : Error(what) {}
};

/// Scene suite generation could not satisfy the requested constraints.
struct GenerationError : Error {
    explicit GenerationError(const std::string& what) : Error(what) {}
};

/// Every optimizer restart diverged to a non-finite objective.
struct OptimizationFailure : Error {
    explicit OptimizationFailure(const std::string& what) : Error(what) {}
};

/// File could not be read, written, or parsed.
struct IoError : Error {
    explicit IoError(const std::string& what) : Error(what) {}
};

} // namespace exaug
