#include "wsamp/wiener.hpp"

#include <cmath>
#include <stdexcept>

namespace wsamp {

namespace {

constexpr long long kStepCap = 10'000'000'000LL;
// exp(-x) below this exponent is ~1e-20; skip the exp and the uniform draw
constexpr double kBridgeExponentCutoff = 45.0;

void require_dt(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
}

}  // namespace

PathSegment sample_segment(double duration, double dt, Rng& rng, double start) {
    require_dt(dt);
    if (!(duration >= 0.0)) throw std::invalid_argument("duration must be >= 0");
    PathSegment seg;
    seg.dt = dt;
    const auto n_full = static_cast<long long>(duration / dt);
    const double rem = std::max(0.0, duration - static_cast<double>(n_full) * dt);
    seg.increments.reserve(static_cast<std::size_t>(n_full) + (rem > 0.0 ? 1 : 0));
    const double sdt = std::sqrt(dt);
    for (long long i = 0; i < n_full; ++i) seg.increments.push_back(sdt * rng.normal());
    if (rem > 0.0) seg.increments.push_back(std::sqrt(rem) * rng.normal());
    seg.running_value = start;
    for (double inc : seg.increments) seg.running_value += inc;
    return seg;
}

HittingResult simulate_hitting(double start_offset, double sqrt_beta, double dt, Rng& rng) {
    require_dt(dt);
    if (!(sqrt_beta >= 0.0)) throw std::invalid_argument("threshold must be >= 0");

    const double b = start_offset;
    const double B = sqrt_beta;
    if (B == 0.0 || std::abs(b) >= B) return {0.0, b, 0.0, 0.0};

    double x = b;
    double tau = 0.0;
    double int_anchor = 0.0;
    double int_from_b = 0.0;
    const double sdt = std::sqrt(dt);

    const auto stop_at = [&](double value, double t) {
        // trapezoid over the partial step [0, t] ending exactly at `value`
        int_anchor += 0.5 * (x * x + value * value) * t;
        const double r1 = x - b;
        const double r2 = value - b;
        int_from_b += 0.5 * (r1 * r1 + r2 * r2) * t;
        tau += t;
    };

    for (long long step = 0; step < kStepCap; ++step) {
        const double x2 = x + sdt * rng.normal();

        if (std::abs(x2) >= B) {
            // endpoint exit: time by linear crossing fraction, value keeps
            // the overshoot
            const double bound = x2 > 0.0 ? B : -B;
            const double theta = (bound - x) / (x2 - x);
            stop_at(bound, theta * dt);
            return {tau, x2, int_anchor, int_from_b};
        }

        // both endpoints inside: within-step crossing probabilities
        double p_up = 0.0, p_dn = 0.0;
        const double e_up = 2.0 * (B - x) * (B - x2) / dt;
        const double e_dn = 2.0 * (B + x) * (B + x2) / dt;
        if (e_up < kBridgeExponentCutoff) p_up = std::exp(-e_up);
        if (e_dn < kBridgeExponentCutoff) p_dn = std::exp(-e_dn);
        if (p_up + p_dn > 0.0) {
            const double u = rng.uniform();
            if (u < p_up + p_dn) {
                const double bound = u < p_up ? B : -B;
                stop_at(bound, rng.uniform() * dt);
                return {tau, bound, int_anchor, int_from_b};
            }
        }

        int_anchor += 0.5 * (x * x + x2 * x2) * dt;
        const double r1 = x - b;
        const double r2 = x2 - b;
        int_from_b += 0.5 * (r1 * r1 + r2 * r2) * dt;
        tau += dt;
        x = x2;
    }
    throw std::runtime_error("simulate_hitting exceeded the step cap");
}

AdvanceResult advance_fixed(double duration, double dt, Rng& rng, double start_minus_anchor) {
    require_dt(dt);
    if (!(duration >= 0.0)) throw std::invalid_argument("duration must be >= 0");

    double x = start_minus_anchor;
    double integral = 0.0;
    const double sdt = std::sqrt(dt);
    const auto n_full = static_cast<long long>(duration / dt);
    const double rem = std::max(0.0, duration - static_cast<double>(n_full) * dt);

    for (long long i = 0; i < n_full; ++i) {
        const double x2 = x + sdt * rng.normal();
        integral += 0.5 * (x * x + x2 * x2) * dt;
        x = x2;
    }
    if (rem > 0.0) {
        const double x2 = x + std::sqrt(rem) * rng.normal();
        integral += 0.5 * (x * x + x2 * x2) * rem;
        x = x2;
    }
    return {x, integral};
}

WaldMoments wald_moment_oracle(const TauSpec& spec, long long n_runs, double dt,
                               std::uint64_t seed) {
    if (n_runs < 10'000) throw std::invalid_argument("wald_moment_oracle needs n_runs >= 1e4");
    require_dt(dt);

    Rng rng(seed);
    double s_tau = 0.0, q_tau = 0.0;
    double s_w2 = 0.0, q_w2 = 0.0;
    double s_w4 = 0.0, q_w4 = 0.0;
    double s_int = 0.0, q_int = 0.0;

    for (long long i = 0; i < n_runs; ++i) {
        double tau, w, integral;
        if (spec.kind == TauSpec::Kind::Hitting) {
            const HittingResult h = simulate_hitting(spec.start_offset, spec.sqrt_beta, dt, rng);
            tau = h.tau;
            w = h.exit_value - spec.start_offset;
            integral = h.integral_w2_from_offset;
        } else {
            const AdvanceResult a = advance_fixed(spec.duration, dt, rng, 0.0);
            tau = spec.duration;
            w = a.end_offset;
            integral = a.integral;
        }
        const double w2 = w * w;
        const double w4 = w2 * w2;
        s_tau += tau;
        q_tau += tau * tau;
        s_w2 += w2;
        q_w2 += w2 * w2;
        s_w4 += w4;
        q_w4 += w4 * w4;
        s_int += integral;
        q_int += integral * integral;
    }

    const double n = static_cast<double>(n_runs);
    const auto finish = [n](double s, double q, double& mean, double& se) {
        mean = s / n;
        se = std::sqrt(std::max(0.0, q / n - mean * mean) / n);
    };
    WaldMoments out;
    out.n_runs = n_runs;
    finish(s_tau, q_tau, out.e_tau, out.se_tau);
    finish(s_w2, q_w2, out.e_w2, out.se_w2);
    finish(s_w4, q_w4, out.e_w4, out.se_w4);
    finish(s_int, q_int, out.e_int_w2, out.se_int_w2);
    return out;
}

}  // namespace wsamp
