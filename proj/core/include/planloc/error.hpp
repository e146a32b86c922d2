#pragma once

#include <stdexcept>
#include <string>

namespace planloc {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invariant violation on a domain type (bad polygon, bad pose, ...).
struct ValidationError : Error {
    using Error::Error;
};

/// Procedural generation could not satisfy its constraints.
struct GenerationError : Error {
    using Error::Error;
};

/// File could not be read or did not match the expected schema.
struct ParseError : Error {
    using Error::Error;
};

/// Ray casting failed (pose outside geometry, open plan, ...).
struct RenderError : Error {
    using Error::Error;
};

/// Training diverged or its inputs were unusable.
struct TrainingError : Error {
    using Error::Error;
};

}  // namespace planloc
