#include "wsamp/moments.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include <cmath>
#include <stdexcept>

namespace wsamp {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kQuadTol = 1e-10;  // relative tolerance of the adaptive quadrature

void require_beta(double beta) {
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
}

bool contains_empirical(const DelayModel& model) {
    return std::visit(
        [](const auto& k) -> bool {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Empirical>) return true;
            else if constexpr (std::is_same_v<T, Scaled>) return contains_empirical(*k.inner);
            else return false;
        },
        model.kind());
}

MomentMethod resolve(MomentMethod method, const DelayModel& model) {
    if (method.kind != MomentMethod::Kind::Auto) return method;
    if (contains_empirical(model)) return MomentMethod::monte_carlo(method.n, method.seed);
    return MomentMethod::quadrature();
}

// streaming mean/se over n draws of `term(rng)`
template <typename Term>
McMoment mc_estimate(long long n, std::uint64_t seed, Term term) {
    if (n <= 0) throw std::invalid_argument("monte carlo draw count must be > 0");
    Rng rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (long long i = 0; i < n; ++i) {
        const double t = term(rng);
        sum += t;
        sumsq += t * t;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sumsq / static_cast<double>(n) - mean * mean);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

// exact age-equation moments; no integration needed for any kind
double age_m1(double beta, const DelayModel& model) {
    return std::visit(
        [beta](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Degenerate>) {
                return std::max(beta, k.value);
            } else if constexpr (std::is_same_v<T, Exponential>) {
                return beta + k.mean * std::exp(-beta / k.mean);
            } else if constexpr (std::is_same_v<T, LogNormalNormalized>) {
                if (beta <= 0.0) return 1.0;
                const double q = std::log(beta) / k.sigma + 0.5 * k.sigma;
                return beta * norm_cdf(q) + norm_cdf(k.sigma - q);
            } else if constexpr (std::is_same_v<T, Scaled>) {
                if (k.factor == 0.0) return beta;
                return k.factor * age_m1(beta / k.factor, *k.inner);
            } else {
                double sum = 0.0;
                for (double s : k.samples) sum += std::max(beta, s);
                return sum / static_cast<double>(k.samples.size());
            }
        },
        model.kind());
}

double age_m2(double beta, const DelayModel& model) {
    return std::visit(
        [beta](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Degenerate>) {
                return std::max(beta * beta, k.value * k.value);
            } else if constexpr (std::is_same_v<T, Exponential>) {
                const double m = k.mean;
                return beta * beta + std::exp(-beta / m) * (2.0 * m * beta + 2.0 * m * m);
            } else if constexpr (std::is_same_v<T, LogNormalNormalized>) {
                const double s2 = k.sigma * k.sigma;
                if (beta <= 0.0) return std::exp(s2);
                const double q = std::log(beta) / k.sigma + 0.5 * k.sigma;
                return beta * beta * norm_cdf(q) + std::exp(s2) * norm_cdf(2.0 * k.sigma - q);
            } else if constexpr (std::is_same_v<T, Scaled>) {
                if (k.factor == 0.0) return beta * beta;
                return k.factor * k.factor * age_m2(beta / k.factor, *k.inner);
            } else {
                double sum = 0.0;
                for (double s : k.samples) sum += std::max(beta * beta, s * s);
                return sum / static_cast<double>(k.samples.size());
            }
        },
        model.kind());
}

}  // namespace

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }
double norm_tail(double x) { return 0.5 * std::erfc(x / kSqrt2); }

double e_max_cond_w2(double c, double y) {
    if (y <= 0.0) return c;
    if (c <= 0.0) return y;
    const double a = std::sqrt(c / y);
    // split at |Z| = a: c inside, y Z^2 outside; E[Z^2 1{|Z|>a}] = 2(a phi(a) + Q(a))
    return c * (1.0 - 2.0 * norm_tail(a)) + 2.0 * y * (a * norm_pdf(a) + norm_tail(a));
}

double e_max_cond_w4(double c, double y) {
    if (y <= 0.0) return c * c;
    if (c <= 0.0) return 3.0 * y * y;
    const double a = std::sqrt(c / y);
    // E[Z^4 1{|Z|>a}] = 2((a^3 + 3a) phi(a) + 3 Q(a))
    return c * c * (1.0 - 2.0 * norm_tail(a)) +
           2.0 * y * y * ((a * a * a + 3.0 * a) * norm_pdf(a) + 3.0 * norm_tail(a));
}

double expect_over_delay(const DelayModel& model, const std::function<double(double)>& g) {
    return std::visit(
        [&g](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Degenerate>) {
                return g(k.value);
            } else if constexpr (std::is_same_v<T, Exponential>) {
                // substitute y = m u so the weight is exactly e^{-u}
                static thread_local boost::math::quadrature::exp_sinh<double> integrator;
                const double m = k.mean;
                return integrator.integrate(
                    [&g, m](double u) {
                        const double w = std::exp(-u);
                        if (w <= 0.0) return 0.0;
                        return g(m * u) * w;
                    },
                    kQuadTol);
            } else if constexpr (std::is_same_v<T, LogNormalNormalized>) {
                // y = e^{sigma x - sigma^2/2} maps the integral to Gaussian weight on R
                static thread_local boost::math::quadrature::sinh_sinh<double> integrator;
                const double sigma = k.sigma;
                const double shift = 0.5 * sigma * sigma;
                return integrator.integrate(
                    [&g, sigma, shift](double x) {
                        const double w = norm_pdf(x);
                        // weight underflows long before e^{sigma x} overflows; skip the
                        // tail nodes so the product never forms inf * 0
                        if (w <= 0.0) return 0.0;
                        return g(std::exp(sigma * x - shift)) * w;
                    },
                    kQuadTol);
            } else if constexpr (std::is_same_v<T, Scaled>) {
                if (k.factor == 0.0) return g(0.0);
                const double d = k.factor;
                return expect_over_delay(*k.inner, [&g, d](double x) { return g(d * x); });
            } else {
                double sum = 0.0;
                for (double s : k.samples) sum += g(s);
                return sum / static_cast<double>(k.samples.size());
            }
        },
        model.kind());
}

McMoment mc_e_max_beta_wy2(double beta, const DelayModel& model, long long n, std::uint64_t seed) {
    require_beta(beta);
    return mc_estimate(n, seed, [beta, &model](Rng& rng) {
        const double y = model.sample(rng);
        const double z = rng.normal();
        return std::max(beta, y * z * z);
    });
}

McMoment mc_e_max_beta2_wy4(double beta, const DelayModel& model, long long n, std::uint64_t seed) {
    require_beta(beta);
    return mc_estimate(n, seed, [beta, &model](Rng& rng) {
        const double y = model.sample(rng);
        const double z = rng.normal();
        const double w2 = y * z * z;
        return std::max(beta * beta, w2 * w2);
    });
}

McMoment mc_e_max_beta_y(double beta, const DelayModel& model, long long n, std::uint64_t seed) {
    require_beta(beta);
    return mc_estimate(n, seed,
                       [beta, &model](Rng& rng) { return std::max(beta, model.sample(rng)); });
}

McMoment mc_e_max_beta2_y2(double beta, const DelayModel& model, long long n, std::uint64_t seed) {
    require_beta(beta);
    return mc_estimate(n, seed, [beta, &model](Rng& rng) {
        const double y = model.sample(rng);
        return std::max(beta * beta, y * y);
    });
}

double e_max_beta_wy2(double beta, const DelayModel& model, MomentMethod method) {
    require_beta(beta);
    method = resolve(method, model);
    if (method.kind == MomentMethod::Kind::MonteCarlo)
        return mc_e_max_beta_wy2(beta, model, method.n, method.seed).value;
    return expect_over_delay(model, [beta](double y) { return e_max_cond_w2(beta, y); });
}

double e_max_beta2_wy4(double beta, const DelayModel& model, MomentMethod method) {
    require_beta(beta);
    method = resolve(method, model);
    if (method.kind == MomentMethod::Kind::MonteCarlo)
        return mc_e_max_beta2_wy4(beta, model, method.n, method.seed).value;
    return expect_over_delay(model, [beta](double y) { return e_max_cond_w4(beta, y); });
}

double e_max_beta_y(double beta, const DelayModel& model, MomentMethod method) {
    require_beta(beta);
    method = resolve(method, model);
    if (method.kind == MomentMethod::Kind::MonteCarlo)
        return mc_e_max_beta_y(beta, model, method.n, method.seed).value;
    return age_m1(beta, model);
}

double e_max_beta2_y2(double beta, const DelayModel& model, MomentMethod method) {
    require_beta(beta);
    method = resolve(method, model);
    if (method.kind == MomentMethod::Kind::MonteCarlo)
        return mc_e_max_beta2_y2(beta, model, method.n, method.seed).value;
    return age_m2(beta, model);
}

}  // namespace wsamp
