#pragma once

#include <cstdint>
#include <vector>

#include "wsamp/rng.hpp"

namespace wsamp {

struct PathSegment {
    double dt = 0.0;
    std::vector<double> increments;  // each Normal(0, step length)
    double running_value = 0.0;      // start plus exact accumulation of increments
};

// Discretized Wiener path over [0, duration]; the final step is the
// remainder duration mod dt.
PathSegment sample_segment(double duration, double dt, Rng& rng, double start = 0.0);

struct HittingResult {
    double tau = 0.0;
    double exit_value = 0.0;  // position at stop; may overshoot the threshold by O(sqrt(dt))
    // integral of position^2 over [0, tau] (position measured from the anchor
    // the start offset refers to)
    double integral_w2 = 0.0;
    // integral of (position - start)^2: the pure Wiener displacement part
    double integral_w2_from_offset = 0.0;
};

// First time |start_offset + W_t| >= sqrt_beta, discretized with a
// Brownian-bridge crossing test per step: from x1 to x2 both inside, each
// boundary a is crossed with probability exp(-2(a-x1)(a-x2)/dt); a declared
// crossing exits at the boundary value at an instant uniform in the step.
// tau = 0 with exit_value = start_offset when already outside or when
// sqrt_beta = 0. Integrals accumulate by the trapezoid rule up to the stop.
HittingResult simulate_hitting(double start_offset, double sqrt_beta, double dt, Rng& rng);

struct AdvanceResult {
    double end_offset = 0.0;  // W_end - anchor
    double integral = 0.0;    // integral of (W - anchor)^2 over [0, duration]
};

// Advance the path for a fixed duration with no stopping rule, measuring
// offset and squared-error integral relative to an anchor that sits
// start_minus_anchor below the starting position.
AdvanceResult advance_fixed(double duration, double dt, Rng& rng, double start_minus_anchor = 0.0);

struct TauSpec {
    enum class Kind { Hitting, FixedTime };
    Kind kind = Kind::Hitting;
    double start_offset = 0.0;  // Hitting: initial position relative to the boundaries' center
    double sqrt_beta = 1.0;     // Hitting: boundary magnitude
    double duration = 0.0;      // FixedTime

    static TauSpec hitting(double start_offset, double sqrt_beta) {
        return {Kind::Hitting, start_offset, sqrt_beta, 0.0};
    }
    static TauSpec fixed_time(double duration) { return {Kind::FixedTime, 0.0, 0.0, duration}; }
};

struct WaldMoments {
    double e_tau = 0.0, e_w2 = 0.0, e_w4 = 0.0, e_int_w2 = 0.0;
    double se_tau = 0.0, se_w2 = 0.0, se_w4 = 0.0, se_int_w2 = 0.0;
    long long n_runs = 0;
};

// Monte Carlo estimates of (E[tau], E[W_tau^2], E[W_tau^4], E[int_0^tau W^2 dt])
// with standard errors, for checking E[W_tau^2] = E[tau] and
// E[int W^2 dt] = E[W_tau^4]/6. W is the Wiener displacement from the start
// point, so the identities apply also when hitting starts off-center.
WaldMoments wald_moment_oracle(const TauSpec& spec, long long n_runs, double dt,
                               std::uint64_t seed);

}  // namespace wsamp
