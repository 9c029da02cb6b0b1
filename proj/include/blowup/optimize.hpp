#ifndef BLOWUP_OPTIMIZE_HPP
#define BLOWUP_OPTIMIZE_HPP

#include <cstdint>
#include <string>

#include "blowup/core.hpp"
#include "blowup/dynamics.hpp"
#include "blowup/pmp.hpp"

// Optimal-control search: exhaustive piecewise-constant enumeration (the
// oracle) and the costate-sphere shooting sweep, plus their cross-check.

namespace blowup {

struct BruteForceOptions {
    int k = 6;            // intervals
    long budget = 6561;   // max |values|^k
    double window = 0.0;  // 0 => max blowup time over the constant laws
};

struct BruteForceResult {
    double T = 0.0;
    ControlLaw law;
    std::vector<int> assignment;  // value index per interval
    double window = 0.0;
    long evaluated = 0;
    struct Candidate {
        std::vector<int> assignment;
        double T = 0.0;
        bool blew_up = false;
    };
    std::vector<Candidate> candidates;  // every enumerated law
};

// Enumerates every value assignment on k intervals over the window (the last
// interval's value held to t_max) and returns the extremal blowup time.
BruteForceResult brute_force(const ControlSystem& sys, Mode mode,
                             const std::vector<Vec>& values, const BruteForceOptions& bf,
                             const IntegrateOptions& opts);

struct SweepCandidate {
    int index = -1;
    Vec psi0;
    bool blew_up = false;
    double T_hat = 0.0;
    double err = 0.0;
    PMPReport report;
    std::string error;  // nonempty when shoot/certify failed for this direction
};

// Unit costate directions: {+1,-1} for n=1, uniform circle for n=2, Fibonacci
// sphere for n=3, seeded Gaussian above. Ranked by T_hat (ascending for TI,
// descending for TS), ties by direction index; failed or non-blowup
// candidates rank last.
std::vector<SweepCandidate> sphere_sweep(const ControlSystem& sys, Mode mode, int n_dirs,
                                         const IntegrateOptions& opts, int jobs = 0,
                                         uint64_t sampler_seed = 0);

// Audit warnings for the mode's assumption set (surfaced, not enforced).
std::vector<std::string> sweep_audit_warnings(const ControlSystem& sys, Mode mode,
                                              double horizon);

struct CrossValidation {
    double T_brute = 0.0;
    double T_sweep = 0.0;
    double slack = 0.0;  // max one-flip sensitivity of the brute optimum
    bool consistent = false;
    BruteForceResult brute;
    SweepCandidate sweep_top;
};

// Asserts the sweep extremal is at least as good as the brute-force best up
// to the one-flip slack; throws ConsistencyFailure otherwise.
CrossValidation cross_validate(const ControlSystem& sys, Mode mode, int k,
                               const std::vector<Vec>& values, int n_dirs,
                               const IntegrateOptions& opts, int jobs = 0);

}  // namespace blowup

#endif
