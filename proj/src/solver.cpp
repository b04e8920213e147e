#include "wsamp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace wsamp {

namespace {

constexpr double kTinyBeta = 1e-12;  // below this the ratio branch uses its analytic limit
constexpr int kMaxIterations = 200;
constexpr int kBracketScanPoints = 64;

void require_tol(double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
}

// Sorted draws with prefix sums so both moment curves evaluate in O(log n).
// mean(max(b, v)) = (b * k + suffix_sum1(k)) / n with k = #{v_i <= b};
// mean(max(b^2, v^2)) shares k because v >= 0.
struct SortedMomentCache {
    std::vector<double> v;
    std::vector<double> sum1;  // sum1[k] = v[0] + ... + v[k-1]
    std::vector<double> sum2;  // same for v^2

    explicit SortedMomentCache(std::vector<double> draws) : v(std::move(draws)) {
        std::sort(v.begin(), v.end());
        sum1.resize(v.size() + 1, 0.0);
        sum2.resize(v.size() + 1, 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) {
            sum1[i + 1] = sum1[i] + v[i];
            sum2[i + 1] = sum2[i] + v[i] * v[i];
        }
    }

    double mean_max(double b) const {
        const auto n = v.size();
        const auto k = static_cast<std::size_t>(
            std::upper_bound(v.begin(), v.end(), b) - v.begin());
        return (b * static_cast<double>(k) + (sum1[n] - sum1[k])) / static_cast<double>(n);
    }

    double mean_max_sq(double b) const {
        const auto n = v.size();
        const auto k = static_cast<std::size_t>(
            std::upper_bound(v.begin(), v.end(), b) - v.begin());
        return (b * b * static_cast<double>(k) + (sum2[n] - sum2[k])) / static_cast<double>(n);
    }
};

struct EqSystem {
    std::function<double(double)> m1;  // beta -> E[max(beta, V)]
    std::function<double(double)> m2;  // beta -> E[max(beta^2, V^2)]
    double m2_at_zero;                 // E[V^2]; decides the beta -> 0 limit of the ratio
};

// V = W_Y^2 for the mse equation, V = Y for the age equation. Monte Carlo
// draws are materialized once per solve since they do not depend on beta.
EqSystem make_system(const DelayModel& model, MomentMethod method, bool age) {
    bool monte_carlo = method.kind == MomentMethod::Kind::MonteCarlo;
    if (method.kind == MomentMethod::Kind::Auto) {
        // same resolution rule as the moment ops: Monte Carlo iff an
        // Empirical kind is involved
        std::function<bool(const DelayModel&)> rec = [&rec](const DelayModel& m) {
            if (std::holds_alternative<Empirical>(m.kind())) return true;
            if (const auto* s = std::get_if<Scaled>(&m.kind())) return rec(*s->inner);
            return false;
        };
        monte_carlo = rec(model);
    }

    if (monte_carlo) {
        // draws do not depend on beta; materialize once per solve
        Rng rng(method.seed);
        std::vector<double> draws(static_cast<std::size_t>(method.n));
        for (auto& d : draws) {
            const double y = model.sample(rng);
            if (age) {
                d = y;
            } else {
                const double z = rng.normal();
                d = y * z * z;
            }
        }
        auto cache = std::make_shared<SortedMomentCache>(std::move(draws));
        const auto n = cache->v.size();
        const double m2_zero = cache->sum2[n] / static_cast<double>(n);
        return {[cache](double b) { return cache->mean_max(b); },
                [cache](double b) { return cache->mean_max_sq(b); },
                m2_zero};
    }
    if (age) {
        return {[&model](double b) { return e_max_beta_y(b, model, MomentMethod::quadrature()); },
                [&model](double b) { return e_max_beta2_y2(b, model, MomentMethod::quadrature()); },
                model.second_moment()};
    }
    return {[&model](double b) { return e_max_beta_wy2(b, model, MomentMethod::quadrature()); },
            [&model](double b) { return e_max_beta2_wy4(b, model, MomentMethod::quadrature()); },
            3.0 * model.second_moment()};
}

ThresholdSolution solve_threshold(const DelayModel& model, const EqSystem& eq,
                                  FrequencyConstraint f, double tol) {
    require_tol(tol);
    const double invf = f.inv();

    ThresholdSolution out;

    if (model.almost_surely_zero()) {
        // both moment curves collapse to beta and beta^2: the fixed point is
        // beta = max(1/f_max, beta/2), i.e. exactly 1/f_max
        out.beta = invf;
        out.binding = f.is_unbounded() ? Binding::UnconstrainedStationarity
                                       : Binding::FrequencyConstraint;
        out.residual = 0.0;
        out.iterations = 0;
        out.brackets = {{invf, invf}};
        return out;
    }

    const auto ratio = [&eq](double b) {
        if (b < kTinyBeta)
            return eq.m2_at_zero > 0.0 ? std::numeric_limits<double>::infinity() : 0.5 * b;
        return eq.m2(b) / (2.0 * b);
    };
    const auto rhs = [&](double b) { return std::max(invf, ratio(b)); };
    const auto g = [&](double b) { return eq.m1(b) - rhs(b); };

    // g(0+) = E[V] - inf < 0 here (E[V^2] > 0 unless Y is a.s. zero), so a
    // bracket starts at 0 and only the upper end must be found.
    double hi = std::max({invf, model.mean(), kTinyBeta});
    int doublings = 0;
    while (g(hi) <= 0.0) {
        hi *= 2.0;
        if (++doublings > kMaxIterations)
            throw SolverError("threshold solver found no sign change while doubling", 0.0, hi,
                              g(hi));
    }

    // coarse scan for extra sign changes; the root is taken from the first
    double prev_x = 0.0;
    bool prev_neg = true;
    for (int i = 1; i <= kBracketScanPoints; ++i) {
        const double x = hi * static_cast<double>(i) / kBracketScanPoints;
        const bool neg = g(x) <= 0.0;
        if (prev_neg != neg) out.brackets.emplace_back(prev_x, x);
        prev_x = x;
        prev_neg = neg;
    }
    if (out.brackets.empty()) out.brackets.emplace_back(0.0, hi);

    double lo = out.brackets.front().first;
    double up = out.brackets.front().second;
    double beta = 0.5 * (lo + up);
    double residual = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < kMaxIterations; ++it) {
        beta = 0.5 * (lo + up);
        const double gval = g(beta);
        residual = std::abs(gval) / rhs(beta);
        if (residual <= tol) break;
        if (gval <= 0.0)
            lo = beta;
        else
            up = beta;
    }
    if (residual > tol)
        throw SolverError("threshold solver did not reach tolerance", lo, up, residual);

    out.beta = beta;
    out.binding = invf >= ratio(beta) ? Binding::FrequencyConstraint
                                      : Binding::UnconstrainedStationarity;
    out.residual = residual;
    out.iterations = it + 1;
    return out;
}

}  // namespace

FrequencyConstraint FrequencyConstraint::parse(const std::string& text) {
    if (text == "inf" || text == "INF" || text == "Inf") return unbounded();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("bad f_max '" + text + "' (want a positive number or inf)");
    }
    if (used != text.size())
        throw std::invalid_argument("bad f_max '" + text + "' (want a positive number or inf)");
    return at(v);
}

std::string FrequencyConstraint::describe() const {
    if (unbounded_) return "inf";
    std::ostringstream os;
    os.precision(12);
    os << f_;
    return os.str();
}

const char* to_string(Binding b) {
    return b == Binding::FrequencyConstraint ? "frequency-constraint" : "unconstrained-stationarity";
}

ThresholdSolution solve_beta_mmse(const DelayModel& model, FrequencyConstraint f, double tol,
                                  MomentMethod method) {
    const EqSystem eq = make_system(model, method, /*age=*/false);
    ThresholdSolution sol = solve_threshold(model, eq, f, tol);
    const double m1 = eq.m1(sol.beta);
    sol.objective = (m1 > 0.0 ? eq.m2(sol.beta) / (6.0 * m1) : 0.0) + model.mean();
    return sol;
}

ThresholdSolution solve_beta_age(const DelayModel& model, FrequencyConstraint f, double tol,
                                 MomentMethod method) {
    const EqSystem eq = make_system(model, method, /*age=*/true);
    ThresholdSolution sol = solve_threshold(model, eq, f, tol);
    const double m1 = eq.m1(sol.beta);
    sol.objective = (m1 > 0.0 ? eq.m2(sol.beta) / (2.0 * m1) : 0.0) + model.mean();
    return sol;
}

double mmse_opt_value(double beta, const DelayModel& model, MomentMethod method) {
    const double m1 = e_max_beta_wy2(beta, model, method);
    const double m2 = e_max_beta2_wy4(beta, model, method);
    return (m1 > 0.0 ? m2 / (6.0 * m1) : 0.0) + model.mean();
}

double mmse_age_value(double beta, const DelayModel& model, MomentMethod method) {
    const double m1 = e_max_beta_y(beta, model, method);
    const double m2 = e_max_beta2_y2(beta, model, method);
    return (m1 > 0.0 ? m2 / (2.0 * m1) : 0.0) + model.mean();
}

bool zero_wait_age_optimal(const DelayModel& model) {
    return model.second_moment() <= 2.0 * model.ess_inf() * model.mean();
}

bool zero_wait_mmse_optimal(const DelayModel& model) { return model.almost_surely_zero(); }

std::vector<double> small_fmax_ratio(const DelayModel& model,
                                     const std::vector<double>& f_max_sequence) {
    for (std::size_t i = 0; i < f_max_sequence.size(); ++i) {
        if (!(f_max_sequence[i] > 0.0))
            throw std::invalid_argument("f_max sequence must be positive");
        if (i > 0 && !(f_max_sequence[i] < f_max_sequence[i - 1]))
            throw std::invalid_argument("f_max sequence must be decreasing");
    }
    std::vector<double> ratios;
    ratios.reserve(f_max_sequence.size());
    if (model.almost_surely_zero()) {
        // (beta/6)/(beta/2) for every cap; evaluate the algebraic value to
        // keep the ratio exact instead of accumulating division rounding
        ratios.assign(f_max_sequence.size(), 1.0 / 3.0);
        return ratios;
    }
    for (double fv : f_max_sequence) {
        const auto f = FrequencyConstraint::at(fv);
        const ThresholdSolution s = solve_beta_mmse(model, f);
        const ThresholdSolution a = solve_beta_age(model, f);
        ratios.push_back(s.objective / a.objective);
    }
    return ratios;
}

}  // namespace wsamp
