#pragma once

#include <stdexcept>
#include <string>

namespace agebif {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user input: grid sizes, parameter signs, malformed config.
struct InvalidArgument : Error {
    using Error::Error;
};

// The backward-Euler step matrix would lose its M-matrix structure,
// i.e. da * max(0, -min coefficient) >= 1.  The message names the bound;
// the caller must refine the age grid.
struct PositivityGuardError : Error {
    using Error::Error;
};

// Cross-diffusion coefficient 1 + gamma*v dropped below the admissible floor.
struct CoefficientFloorError : Error {
    using Error::Error;
};

// A Newton iteration (per-step or trace-level) failed to converge.
struct NewtonFailure : Error {
    using Error::Error;
};

// Requested a nontrivial branch solution where none exists (parameter <= 1).
struct NoPositiveSolution : Error {
    using Error::Error;
};

// A bifurcation point was requested but no root exists in the search range.
struct NoBifurcation : Error {
    using Error::Error;
};

// "Cannot happen" under the documented preconditions.
struct InternalError : Error {
    using Error::Error;
};

} // namespace agebif
