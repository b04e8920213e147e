#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wsamp/delay_model.hpp"
#include "wsamp/moments.hpp"

namespace wsamp {

// Sampling-frequency cap. Unbounded is a distinct marker, not a large float,
// so 1/f_max is exactly 0 in the unconstrained case.
class FrequencyConstraint {
public:
    static FrequencyConstraint unbounded() { return FrequencyConstraint(0.0, true); }
    static FrequencyConstraint at(double f_max) {
        if (!(f_max > 0.0)) throw std::invalid_argument("f_max must be > 0");
        if (std::isinf(f_max)) return unbounded();
        return FrequencyConstraint(f_max, false);
    }
    // "inf" or a positive number
    static FrequencyConstraint parse(const std::string& text);

    bool is_unbounded() const { return unbounded_; }
    double f_max() const { return unbounded_ ? std::numeric_limits<double>::infinity() : f_; }
    double inv() const { return unbounded_ ? 0.0 : 1.0 / f_; }
    std::string describe() const;

private:
    FrequencyConstraint(double f, bool unbounded) : f_(f), unbounded_(unbounded) {}
    double f_;
    bool unbounded_;
};

enum class Binding { FrequencyConstraint, UnconstrainedStationarity };

const char* to_string(Binding b);

struct ThresholdSolution {
    double beta = 0.0;
    double objective = 0.0;
    Binding binding = Binding::UnconstrainedStationarity;
    // |LHS - RHS| / RHS of the fixed point at the returned beta
    double residual = 0.0;
    int iterations = 0;
    // every sign-change interval seen while bracketing; more than one entry
    // means the root may not be unique and the smallest was taken
    std::vector<std::pair<double, double>> brackets;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double lo, double hi, double residual)
        : std::runtime_error(what), lo(lo), hi(hi), residual(residual) {}
    double lo, hi, residual;
};

// Threshold for minimum time-average squared estimation error: beta solves
//   E[max(beta, W_Y^2)] = max(1/f_max, E[max(beta^2, W_Y^4)] / (2 beta))
// with the ratio branch continued through beta -> 0 by its analytic limit.
ThresholdSolution solve_beta_mmse(const DelayModel& model, FrequencyConstraint f,
                                  double tol = 1e-9, MomentMethod method = {});

// Age-variant threshold: beta solves
//   E[max(beta, Y)] = max(1/f_max, E[max(beta^2, Y^2)] / (2 beta))
ThresholdSolution solve_beta_age(const DelayModel& model, FrequencyConstraint f,
                                 double tol = 1e-9, MomentMethod method = {});

// E[max(beta^2, W_Y^4)] / (6 E[max(beta, W_Y^2)]) + E[Y]
double mmse_opt_value(double beta, const DelayModel& model, MomentMethod method = {});

// E[max(beta^2, Y^2)] / (2 E[max(beta, Y)]) + E[Y]
double mmse_age_value(double beta, const DelayModel& model, MomentMethod method = {});

// zero-wait sampling minimizes time-average age iff E[Y^2] <= 2 essinf(Y) E[Y]
bool zero_wait_age_optimal(const DelayModel& model);

// zero-wait sampling minimizes the MSE objective iff Y = 0 almost surely
bool zero_wait_mmse_optimal(const DelayModel& model);

// mmse_opt / mmse_age_opt at each cap; tends to 1/3 as f_max -> 0 and is
// identically 1/3 for almost-surely-zero delay. f_max values must be
// positive and decreasing.
std::vector<double> small_fmax_ratio(const DelayModel& model,
                                     const std::vector<double>& f_max_sequence);

}  // namespace wsamp
