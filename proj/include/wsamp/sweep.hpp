#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wsamp/delay_model.hpp"
#include "wsamp/simulator.hpp"
#include "wsamp/solver.hpp"

namespace wsamp {

enum class SweepKind { FmaxSweep, SigmaSweep, ScaleSweep };

std::string to_string(SweepKind kind);
SweepKind sweep_kind_from_string(const std::string& text);

enum class Feasibility { Feasible, Infeasible, Divergent };

std::string to_string(Feasibility flag);
Feasibility feasibility_from_string(const std::string& text);

// Column order in rows and CSV output.
inline constexpr std::array<PolicySpec::Kind, 4> kSweepPolicyOrder = {
    PolicySpec::Kind::SignalThreshold, PolicySpec::Kind::AgeThreshold, PolicySpec::Kind::ZeroWait,
    PolicySpec::Kind::Uniform};

// CSV-safe column prefix: signal_threshold, age_threshold, zero_wait, uniform.
const char* sweep_policy_token(PolicySpec::Kind kind);

// Numeric fields are NaN when not applicable (empty CSV cell). The error note
// is carried for diagnostics, not serialized to CSV.
struct PolicyCell {
    bool present = false;
    Feasibility flag = Feasibility::Feasible;
    double beta = 0.0;
    double analytic = 0.0;
    double mse = 0.0;
    double mse_ci95 = 0.0;
    double age = 0.0;
    double age_ci95 = 0.0;
    double rate = 0.0;
    std::string error;

    PolicyCell();
};

struct SweepRow {
    double parameter = 0.0;
    std::array<PolicyCell, 4> cells;  // indexed like kSweepPolicyOrder
    // analytic signal objective / analytic age objective; NaN unless both
    // threshold policies are in the sweep
    double ratio = 0.0;

    SweepRow();
};

struct SweepConfig {
    SweepKind kind = SweepKind::FmaxSweep;
    DelayModel model_template = DelayModel::exponential(1.0);  // base for fmax/scale sweeps
    std::vector<double> grid;                                  // nonempty, strictly increasing
    std::vector<PolicySpec::Kind> policies{
        PolicySpec::Kind::SignalThreshold, PolicySpec::Kind::AgeThreshold,
        PolicySpec::Kind::ZeroWait, PolicySpec::Kind::Uniform};
    FrequencyConstraint f_max = FrequencyConstraint::unbounded();  // sigma/scale sweeps only
    long long n_cycles = 200'000;
    double dt = 0.0;  // 0: per-policy default
    std::uint64_t seed = 42;
    std::string output_path;  // CSV path; empty skips file output

    static std::vector<double> default_grid(SweepKind kind);
};

// Everything the CSV records; the sweep kind and model live in the sidecar.
struct SweepTable {
    std::vector<PolicySpec::Kind> policies;
    std::vector<SweepRow> rows;
};

// Field-by-field equality with NaN == NaN, the CSV round-trip contract.
bool sweep_tables_equal(const SweepTable& a, const SweepTable& b);

// Grid points run on a worker pool (WSAMP_THREADS, default hardware
// concurrency) with per-point seeds derived from config.seed, so the table is
// identical at any thread count. Stored values are snapped to their 12
// significant digit CSV representation, making the CSV round-trip exact.
// Writes output_path plus a .json sidecar when output_path is set.
SweepTable run_sweep(const SweepConfig& config);

std::string sweep_csv(const SweepTable& table);
SweepTable parse_sweep_csv(const std::string& text);

std::string sweep_sidecar_json(const SweepConfig& config);
void write_sweep_outputs(const SweepConfig& config, const SweepTable& table);

// Low-frequency limits along an f_max grid: beta*f_max and objective*6*f_max
// both approach 1 as f_max -> 0. Scale mode instead solves the unconstrained
// age threshold on Scaled(base, d) and reports beta(d)/(d*beta_base), which
// is 1 up to solver tolerance. Grids must be strictly increasing and span at
// least two decades.
struct AsymptoticRow {
    double parameter = 0.0;
    double beta = 0.0;
    double ratio_primary = 0.0;    // beta*f_max, or the scale ratio
    double ratio_secondary = 0.0;  // objective*6*f_max; NaN in scale mode
};

struct AsymptoticReport {
    bool low_frequency = true;
    std::vector<AsymptoticRow> rows;
};

AsymptoticReport asymptotic_low_frequency(const DelayModel& model,
                                          const std::vector<double>& fmax_grid);
AsymptoticReport asymptotic_scale(const DelayModel& base, const std::vector<double>& d_grid);

std::string asymptotic_csv(const AsymptoticReport& report);

}  // namespace wsamp
