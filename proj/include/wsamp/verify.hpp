#pragma once

#include <cstdint>
#include <string>

#include "wsamp/simulator.hpp"

namespace wsamp {

struct VerifyOptions {
    long long n_runs = 200'000;    // stopping-time Monte Carlo suites
    long long n_cycles = 100'000;  // simulation suites; identity suites floor at 1e5
    double dt = 1e-3;
    std::uint64_t seed = 42;
};

struct VerifyResult {
    std::vector<IdentityReport> reports;
    int failures = 0;
};

// Runs the stopping-time, hitting, cycle-identity and age=mse suites on a
// worker pool (WSAMP_THREADS). Report order is fixed regardless of thread
// count. Hitting-derived lines carry a discretization margin on top of the
// 4-standard-error band, so a coarse dt shows larger deviations without
// spurious failures.
VerifyResult run_verify(const VerifyOptions& options = {});

std::string verify_text(const VerifyResult& result);

}  // namespace wsamp
