#pragma once

#include <cstdint>
#include <functional>

#include "wsamp/delay_model.hpp"

namespace wsamp {

double norm_pdf(double x);
double norm_cdf(double x);
// upper tail 1 - Phi(x)
double norm_tail(double x);

// E[max(c, y Z^2)] for Z standard normal; exact in the normal pdf/cdf.
double e_max_cond_w2(double c, double y);
// E[max(c^2, y^2 Z^4)]; the crossing point |Z| = sqrt(c/y) is shared with
// e_max_cond_w2 since y^2 z^4 >= c^2 iff y z^2 >= c.
double e_max_cond_w4(double c, double y);

// Seed for the default Monte Carlo moment method on Empirical models, so
// repeat evaluations are reproducible without caller plumbing.
inline constexpr std::uint64_t kEmpiricalMomentSeed = 0x9d2c5680e5a1b0c3ULL;

struct MomentMethod {
    enum class Kind { Auto, Quadrature, MonteCarlo };
    Kind kind = Kind::Auto;
    long long n = 10'000'000;
    std::uint64_t seed = kEmpiricalMomentSeed;

    static MomentMethod quadrature() { return {Kind::Quadrature, 0, 0}; }
    static MomentMethod monte_carlo(long long n, std::uint64_t seed) {
        return {Kind::MonteCarlo, n, seed};
    }
};

// E_Y[g(Y)] by adaptive quadrature against the delay density (exact atom sums
// for Degenerate/Empirical, factor substitution for Scaled). Relative
// tolerance 1e-10.
double expect_over_delay(const DelayModel& model, const std::function<double(double)>& g);

// The four moment functionals of the threshold equations. W_Y | Y=y is
// Normal(0, y). Auto resolves to quadrature for parametric kinds and to
// Monte Carlo (n=1e7, fixed seed) for Empirical. Negative beta throws.
double e_max_beta_wy2(double beta, const DelayModel& model, MomentMethod method = {});
double e_max_beta2_wy4(double beta, const DelayModel& model, MomentMethod method = {});
double e_max_beta_y(double beta, const DelayModel& model, MomentMethod method = {});
double e_max_beta2_y2(double beta, const DelayModel& model, MomentMethod method = {});

struct McMoment {
    double value;
    double se;  // standard error of the mean
};

// Monte Carlo estimators exposing standard errors; these are the oracles the
// tests check quadrature against.
McMoment mc_e_max_beta_wy2(double beta, const DelayModel& model, long long n, std::uint64_t seed);
McMoment mc_e_max_beta2_wy4(double beta, const DelayModel& model, long long n, std::uint64_t seed);
McMoment mc_e_max_beta_y(double beta, const DelayModel& model, long long n, std::uint64_t seed);
McMoment mc_e_max_beta2_y2(double beta, const DelayModel& model, long long n, std::uint64_t seed);

}  // namespace wsamp
