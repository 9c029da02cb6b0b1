#ifndef BLOWUP_ERRORS_HPP
#define BLOWUP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace blowup {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent problem definition (JSON config, constructor arguments).
struct ConfigError : Error {
    using Error::Error;
};

// An operation's stated hypothesis does not hold for the given inputs.
struct PreconditionError : Error {
    using Error::Error;
};

// RHS produced a non-finite value; message names the offending component.
struct EvaluationFailure : Error {
    using Error::Error;
};

// Adaptive step size underflowed.
struct StepFailure : Error {
    using Error::Error;
};

// Chart oscillation limit exceeded during integration.
struct ChartFailure : Error {
    using Error::Error;
};

// No rho below the configured cap satisfies the threshold conditions.
struct NotSatisfiableError : Error {
    using Error::Error;
};

struct NoBlowupError : Error {
    using Error::Error;
};

struct BudgetExceeded : Error {
    using Error::Error;
};

// Problem (TS) is not well posed: some admissible law fails to blow up.
struct NotWellPosed : Error {
    using Error::Error;
};

// brute_force and sphere_sweep disagree beyond the estimated slack.
struct ConsistencyFailure : Error {
    using Error::Error;
};

}  // namespace blowup

#endif
