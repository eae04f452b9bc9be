#pragma once

#include <stdexcept>
#include <string>

namespace ixcurv {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The chart fails to be an immersion where one was required.
struct DegenerateImmersion : Error {
    using Error::Error;
};

// A critical point failed the nondegeneracy gate.
struct DegenerateCritical : Error {
    using Error::Error;
};

// Circle-link classification could not be stabilized (value ties or
// non-converging index under radius shrinking).
struct AmbiguousLink : Error {
    using Error::Error;
};

// The critical-point search could not be certified complete at max_grid.
struct CompletenessUncertified : Error {
    using Error::Error;
};

struct UnknownScenario : Error {
    using Error::Error;
};

struct InvalidParameter : Error {
    using Error::Error;
};

// A combined-function block is non-Morse for the sampled data.
struct DegenerateBlock : Error {
    using Error::Error;
};

// A sectional curvature sign test failed.
struct NonDefiniteSign : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// A report or data file could not be written.
struct IoError : Error {
    using Error::Error;
};

}  // namespace ixcurv
