#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "wsamp/rng.hpp"

namespace wsamp {

class DelayModel;

struct Degenerate {
    double value;  // seconds, >= 0
};

struct Exponential {
    double mean;  // seconds, > 0
};

// Y = e^{sigma X} / E[e^{sigma X}] with X standard normal; E[Y] = 1 exactly.
// The normalizer E[e^{sigma X}] = e^{sigma^2/2} is analytic, not estimated.
struct LogNormalNormalized {
    double sigma;  // > 0
};

// Y = factor * X with X drawn from the inner model; factor >= 0.
struct Scaled {
    std::shared_ptr<const DelayModel> inner;
    double factor;
};

// Resamples i.i.d. with replacement from a fixed nonempty sample set.
struct Empirical {
    std::vector<double> samples;  // each >= 0
};

// Channel delay distribution. Immutable; safe to share across threads.
class DelayModel {
public:
    using Kind = std::variant<Degenerate, Exponential, LogNormalNormalized, Scaled, Empirical>;

    static DelayModel degenerate(double value);
    static DelayModel exponential(double mean);
    static DelayModel lognormal_normalized(double sigma);
    static DelayModel scaled(DelayModel inner, double factor);
    static DelayModel empirical(std::vector<double> samples);

    double mean() const;
    double second_moment() const;
    // largest y with Pr[Y < y] = 0
    double ess_inf() const;
    double sample(Rng& rng) const;
    bool almost_surely_zero() const;
    // round-trips through parse_delay_model for parametric kinds
    std::string describe() const;

    const Kind& kind() const { return kind_; }

private:
    explicit DelayModel(Kind kind) : kind_(std::move(kind)) {}
    Kind kind_;
};

// One nonnegative decimal per line, '\n' or '\r\n' endings. Throws
// std::runtime_error naming the path on a missing file, and
// std::invalid_argument with the 1-based line number on parse/domain errors
// or an empty file.
DelayModel load_empirical(const std::string& path);

// det:y | exp:mean | lognorm:sigma | scaled:d:inner | file:path
DelayModel parse_delay_model(const std::string& text);

}  // namespace wsamp
