#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wsamp/delay_model.hpp"
#include "wsamp/wiener.hpp"

namespace wsamp {

struct PolicySpec {
    enum class Kind { Uniform, ZeroWait, AgeThreshold, SignalThreshold };
    Kind kind = Kind::ZeroWait;
    double param = 0.0;  // Uniform: sampling interval; thresholds: beta

    static PolicySpec uniform(double interval);
    static PolicySpec zero_wait();
    static PolicySpec age_threshold(double beta);
    static PolicySpec signal_threshold(double beta);

    // sampling decisions ignore the signal path for every kind but SignalThreshold
    bool signal_independent() const { return kind != Kind::SignalThreshold; }
    std::string describe() const;
};

// uniform:interval | zero-wait | age-threshold:beta | signal-threshold:beta
// (the CLI resolves ":auto" betas through the solvers before calling this)
PolicySpec parse_policy(const std::string& text);

// One inter-delivery window [D_i, D_{i+1}). For renewal policies y is the
// delay of the sample opening the window and y+z the generation gap; for
// Uniform y is the delay of the sample closing it and y+z the window length.
// Either sum telescopes to the elapsed time across many cycles.
struct CycleRecord {
    double y;             // a sample delay, as above
    double z;             // waiting time after delivery (idle gap before service for Uniform)
    double delta_w_end;   // W at next sample's generation minus W at this sample's
    double mse_integral;  // int (W_t - W_{S_i})^2 dt over the window
    double age_integral;  // int (t - S_i) dt over the window
};

struct Estimate {
    double value = 0.0;
    double ci95 = 0.0;  // 95% half-width by batch means
};

struct SimulationResult {
    Estimate mse;
    Estimate age;
    Estimate rate;
    long long n_cycles = 0;
    std::string policy;
    std::string delay;
    std::uint64_t seed = 0;
    double dt = 0.0;
    double time_span = 0.0;  // sum of (y + z) over recorded cycles
    bool divergent = false;
    long long max_queue_len = 0;
};

struct SimOptions {
    long long queue_cap = 100'000;  // undelivered samples allowed before flagging divergence
    bool keep_records = false;
};

struct RunOutput {
    SimulationResult result;
    std::vector<CycleRecord> records;  // populated only with keep_records
};

// min(active scales)/1000 with a 1e-6 floor; scales are the threshold or
// interval parameter, the mean delay, and 1.
double default_dt(const PolicySpec& policy, const DelayModel& model);

// Simulates warm-up (max(n_cycles/100, 100) cycles, discarded) plus n_cycles
// recorded delivery-to-delivery cycles. Threshold and zero-wait policies run
// the renewal loop (next sample at or after delivery); Uniform runs a true
// FIFO queue. n_cycles >= 1e3.
SimulationResult run_cycles(const PolicySpec& policy, const DelayModel& model,
                            long long n_cycles, double dt, std::uint64_t seed);
RunOutput run_cycles_detailed(const PolicySpec& policy, const DelayModel& model,
                              long long n_cycles, double dt, std::uint64_t seed,
                              const SimOptions& options = {});

struct CheckLine {
    std::string name;
    double observed = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct IdentityReport {
    std::string title;
    std::vector<CheckLine> checks;
    bool pass = true;
};

// Renewal-cycle identities on records from a threshold-policy run (>= 1e5
// cycles): the squared-error integral decomposition
//   mean(mse_integral) = mean(delta_w_end^4)/6 + mean(y+z) E[Y]
// checked through the per-record difference, plus the closed-form values of
// mean(y+z) and mean(delta_w_end^4) for the given threshold.
IdentityReport cycle_identity_check(const std::vector<CycleRecord>& records,
                                    const DelayModel& model, const PolicySpec& policy);

// Time-average MSE equals time-average age when sampling ignores the signal;
// SignalThreshold input is a precondition error.
IdentityReport age_equals_mse_for_signal_independent(const PolicySpec& policy,
                                                     const DelayModel& model, long long n_cycles,
                                                     double dt, std::uint64_t seed);

}  // namespace wsamp
