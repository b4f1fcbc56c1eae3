#pragma once

#include <stdexcept>
#include <string>

namespace partlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Violated input contract (bad rule table, mismatched alphabet, ...).
struct PreconditionError : Error {
    using Error::Error;
};

// Window or budget too small for the requested computation.
struct FeasibilityError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace partlab
