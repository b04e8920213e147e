#include "wsamp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "wsamp/moments.hpp"
#include "wsamp/rng.hpp"

namespace wsamp {

namespace {

// Student-t 0.975 quantile, 29 degrees of freedom (30 batches)
constexpr double kT29 = 2.0452296421327034;
constexpr int kBatches = 30;

void require_param(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

std::string format_param(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

PolicySpec PolicySpec::uniform(double interval) {
    require_param(std::isfinite(interval) && interval > 0.0, "uniform interval must be > 0");
    return {Kind::Uniform, interval};
}

PolicySpec PolicySpec::zero_wait() { return {Kind::ZeroWait, 0.0}; }

PolicySpec PolicySpec::age_threshold(double beta) {
    require_param(std::isfinite(beta) && beta >= 0.0, "age threshold must be >= 0");
    return {Kind::AgeThreshold, beta};
}

PolicySpec PolicySpec::signal_threshold(double beta) {
    require_param(std::isfinite(beta) && beta >= 0.0, "signal threshold must be >= 0");
    return {Kind::SignalThreshold, beta};
}

std::string PolicySpec::describe() const {
    switch (kind) {
        case Kind::Uniform: return "uniform:" + format_param(param);
        case Kind::ZeroWait: return "zero-wait";
        case Kind::AgeThreshold: return "age-threshold:" + format_param(param);
        case Kind::SignalThreshold: return "signal-threshold:" + format_param(param);
    }
    return "?";
}

PolicySpec parse_policy(const std::string& text) {
    if (text == "zero-wait") return PolicySpec::zero_wait();
    auto tail_number = [&](const std::string& prefix) {
        std::string tail = text.substr(prefix.size());
        size_t used = 0;
        double v = std::stod(tail, &used);
        if (used != tail.size()) throw std::invalid_argument("bad policy parameter: " + tail);
        return v;
    };
    if (text.rfind("uniform:", 0) == 0) return PolicySpec::uniform(tail_number("uniform:"));
    if (text.rfind("age-threshold:", 0) == 0)
        return PolicySpec::age_threshold(tail_number("age-threshold:"));
    if (text.rfind("signal-threshold:", 0) == 0)
        return PolicySpec::signal_threshold(tail_number("signal-threshold:"));
    throw std::invalid_argument("unknown policy: " + text);
}

double default_dt(const PolicySpec& policy, const DelayModel& model) {
    double scale = 1.0;
    if (model.mean() > 0.0) scale = std::min(scale, model.mean());
    if (policy.kind == PolicySpec::Kind::Uniform || policy.param > 0.0)
        scale = std::min(scale, policy.param);
    return std::max(scale / 1000.0, 1e-6);
}

namespace {

struct Totals {
    std::vector<double> mse, age, len;
};

Estimate ratio_estimate(const std::vector<double>& num, const std::vector<double>& den) {
    double sn = 0.0, sd = 0.0;
    for (double v : num) sn += v;
    for (double v : den) sd += v;
    Estimate e;
    e.value = sn / sd;

    const size_t n = num.size();
    if (n < static_cast<size_t>(kBatches)) {
        e.ci95 = std::numeric_limits<double>::infinity();
        return e;
    }
    const size_t base = n / kBatches, extra = n % kBatches;
    double mean = 0.0, m2 = 0.0;
    size_t pos = 0;
    for (int b = 0; b < kBatches; ++b) {
        size_t count = base + (static_cast<size_t>(b) < extra ? 1 : 0);
        double bn = 0.0, bd = 0.0;
        for (size_t i = 0; i < count; ++i, ++pos) {
            bn += num[pos];
            bd += den[pos];
        }
        double r = bn / bd;
        double d = r - mean;
        mean += d / (b + 1);
        m2 += d * (r - mean);
    }
    double var = m2 / (kBatches - 1);
    e.ci95 = kT29 * std::sqrt(var / kBatches);
    return e;
}

SimulationResult finalize(const PolicySpec& policy, const DelayModel& model,
                          const std::vector<CycleRecord>& records, double dt,
                          std::uint64_t seed) {
    const size_t n = records.size();
    std::vector<double> mse(n), age(n), len(n), ones(n, 1.0);
    for (size_t i = 0; i < n; ++i) {
        mse[i] = records[i].mse_integral;
        age[i] = records[i].age_integral;
        len[i] = records[i].y + records[i].z;
    }
    SimulationResult r;
    r.mse = ratio_estimate(mse, len);
    r.age = ratio_estimate(age, len);
    r.rate = ratio_estimate(ones, len);
    r.n_cycles = static_cast<long long>(n);
    r.policy = policy.describe();
    r.delay = model.describe();
    r.seed = seed;
    r.dt = dt;
    for (double v : len) r.time_span += v;
    return r;
}

long long warmup_cycles(long long n_cycles) { return std::max(n_cycles / 100, 100LL); }

RunOutput run_renewal(const PolicySpec& policy, const DelayModel& model, long long n_cycles,
                      double dt, std::uint64_t seed, const SimOptions& options) {
    Rng rng(seed);
    const long long warmup = warmup_cycles(n_cycles);
    const long long total = warmup + n_cycles;

    std::vector<CycleRecord> records;
    records.reserve(static_cast<size_t>(n_cycles));

    // x is the offset of the current path value from the value of the most
    // recently generated sample; at a delivery instant that sample is the
    // freshly adopted estimate.
    double x = 0.0;
    double y_prev = 0.0;
    const double sqrt_beta =
        policy.kind == PolicySpec::Kind::SignalThreshold ? std::sqrt(policy.param) : 0.0;

    for (long long i = 0; i < total; ++i) {
        double z = 0.0, delta = x, wait_integral = 0.0;
        switch (policy.kind) {
            case PolicySpec::Kind::ZeroWait:
                break;
            case PolicySpec::Kind::SignalThreshold: {
                HittingResult h = simulate_hitting(x, sqrt_beta, dt, rng);
                z = h.tau;
                delta = h.exit_value;
                wait_integral = h.integral_w2;
                break;
            }
            case PolicySpec::Kind::AgeThreshold: {
                z = std::max(policy.param - y_prev, 0.0);
                if (z > 0.0) {
                    AdvanceResult a = advance_fixed(z, dt, rng, x);
                    delta = a.end_offset;
                    wait_integral = a.integral;
                }
                break;
            }
            case PolicySpec::Kind::Uniform:
                throw std::logic_error("uniform policy uses the queued loop");
        }

        double y_next = model.sample(rng);
        AdvanceResult flight = advance_fixed(y_next, dt, rng, delta);

        if (i >= warmup) {
            CycleRecord rec;
            rec.y = y_prev;
            rec.z = z;
            rec.delta_w_end = delta;
            rec.mse_integral = wait_integral + flight.integral;
            double window = z + y_next;
            rec.age_integral = y_prev * window + 0.5 * window * window;
            records.push_back(rec);
        }

        x = flight.end_offset - delta;
        y_prev = y_next;
    }

    RunOutput out;
    out.result = finalize(policy, model, records, dt, seed);
    out.result.max_queue_len = 1;
    if (options.keep_records) out.records = std::move(records);
    return out;
}

struct InFlight {
    double delivery_time;
    double gen_time;
    double value;
    double delay;
};

RunOutput run_queued(const PolicySpec& policy, const DelayModel& model, long long n_cycles,
                     double dt, std::uint64_t seed, const SimOptions& options) {
    Rng rng(seed);
    const long long warmup = warmup_cycles(n_cycles);
    const long long total = warmup + n_cycles;
    const double interval = policy.param;

    std::vector<CycleRecord> records;
    records.reserve(static_cast<size_t>(n_cycles));

    std::deque<InFlight> queue;
    double t = 0.0, w = 0.0;
    double anchor_value = 0.0, anchor_gen = 0.0, anchor_delivery = 0.0;
    double mse_acc = 0.0;
    long long k = 1;                 // index of the next sample to generate
    double last_delivery_end = 0.0;  // departure time of the latest scheduled sample
    long long delivered = 0;
    long long max_queue = 0;
    bool divergent = false;
    bool queue_emptied_after_warmup = false;

    while (delivered < total) {
        double next_gen = static_cast<double>(k) * interval;
        double next_del =
            queue.empty() ? std::numeric_limits<double>::infinity() : queue.front().delivery_time;
        double t_next = std::min(next_gen, next_del);

        if (t_next > t) {
            AdvanceResult seg = advance_fixed(t_next - t, dt, rng, w - anchor_value);
            mse_acc += seg.integral;
            w = anchor_value + seg.end_offset;
            t = t_next;
        }

        if (next_del <= next_gen) {
            InFlight s = queue.front();
            queue.pop_front();
            if (delivered >= warmup) {
                CycleRecord rec;
                rec.y = s.delay;
                rec.z = std::max(s.gen_time - anchor_delivery, 0.0);
                rec.delta_w_end = s.value - anchor_value;
                rec.mse_integral = mse_acc;
                double window = rec.y + rec.z;
                double start_age = anchor_delivery - anchor_gen;
                rec.age_integral = start_age * window + 0.5 * window * window;
                records.push_back(rec);
            }
            anchor_value = s.value;
            anchor_gen = s.gen_time;
            anchor_delivery = s.delivery_time;
            mse_acc = 0.0;
            ++delivered;
            if (queue.empty() && delivered >= warmup) queue_emptied_after_warmup = true;
        } else {
            double y = model.sample(rng);
            double start = std::max(next_gen, last_delivery_end);
            last_delivery_end = start + y;
            queue.push_back({last_delivery_end, next_gen, w, y});
            ++k;
            max_queue = std::max(max_queue, static_cast<long long>(queue.size()));
            if (static_cast<long long>(queue.size()) > options.queue_cap) {
                divergent = true;
                break;
            }
        }
    }

    if (!queue_emptied_after_warmup) divergent = true;

    // On divergence the tail of the target count is missing; estimates come
    // from whatever completed, which the flag marks as unusable.
    RunOutput out;
    if (records.empty()) records.push_back({0.0, interval, 0.0, 0.0, 0.0});
    out.result = finalize(policy, model, records, dt, seed);
    out.result.divergent = divergent;
    out.result.max_queue_len = max_queue;
    if (options.keep_records) out.records = std::move(records);
    return out;
}

void validate_run(const PolicySpec& policy, const DelayModel& model, long long n_cycles,
                  double dt) {
    if (n_cycles < 1000) throw std::invalid_argument("n_cycles must be >= 1000");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be > 0");
    bool zero_length = false;
    switch (policy.kind) {
        case PolicySpec::Kind::Uniform: break;
        case PolicySpec::Kind::ZeroWait: zero_length = model.mean() == 0.0; break;
        case PolicySpec::Kind::AgeThreshold:
        case PolicySpec::Kind::SignalThreshold:
            zero_length = model.mean() == 0.0 && policy.param == 0.0;
            break;
    }
    if (zero_length)
        throw std::invalid_argument(
            "policy yields zero-length cycles (zero threshold and zero delay)");
}

}  // namespace

RunOutput run_cycles_detailed(const PolicySpec& policy, const DelayModel& model,
                              long long n_cycles, double dt, std::uint64_t seed,
                              const SimOptions& options) {
    validate_run(policy, model, n_cycles, dt);
    if (policy.kind == PolicySpec::Kind::Uniform)
        return run_queued(policy, model, n_cycles, dt, seed, options);
    return run_renewal(policy, model, n_cycles, dt, seed, options);
}

SimulationResult run_cycles(const PolicySpec& policy, const DelayModel& model, long long n_cycles,
                            double dt, std::uint64_t seed) {
    return run_cycles_detailed(policy, model, n_cycles, dt, seed).result;
}

namespace {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

template <typename F>
MeanSe record_stat(const std::vector<CycleRecord>& records, F&& f) {
    double mean = 0.0, m2 = 0.0;
    size_t n = 0;
    for (const CycleRecord& r : records) {
        double v = f(r);
        ++n;
        double d = v - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (v - mean);
    }
    MeanSe out;
    out.mean = mean;
    out.se = std::sqrt(m2 / (static_cast<double>(n) - 1.0) / static_cast<double>(n));
    return out;
}

CheckLine make_line(std::string name, MeanSe obs, double expected, double extra_se = 0.0) {
    CheckLine line;
    line.name = std::move(name);
    line.observed = obs.mean;
    line.expected = expected;
    line.tolerance = 4.0 * std::sqrt(obs.se * obs.se + extra_se * extra_se);
    line.pass = std::abs(obs.mean - expected) <= line.tolerance;
    return line;
}

}  // namespace

IdentityReport cycle_identity_check(const std::vector<CycleRecord>& records,
                                    const DelayModel& model, const PolicySpec& policy) {
    if (records.size() < 100'000)
        throw std::invalid_argument("cycle identity check needs >= 1e5 records");
    const bool signal = policy.kind == PolicySpec::Kind::SignalThreshold;
    if (!signal && policy.kind != PolicySpec::Kind::AgeThreshold)
        throw std::invalid_argument("cycle identity check expects a threshold policy");

    const double beta = policy.param;
    const double mean_delay = model.mean();

    IdentityReport report;
    report.title = "cycle identities, " + policy.describe() + " over " + model.describe();

    MeanSe decomposition = record_stat(records, [&](const CycleRecord& r) {
        double d2 = r.delta_w_end * r.delta_w_end;
        return r.mse_integral - d2 * d2 / 6.0 - (r.y + r.z) * mean_delay;
    });
    report.checks.push_back(
        make_line("mse integral = delta^4/6 + length*E[Y]", decomposition, 0.0));

    MeanSe length = record_stat(records, [](const CycleRecord& r) { return r.y + r.z; });
    MeanSe quartic = record_stat(records, [](const CycleRecord& r) {
        double d2 = r.delta_w_end * r.delta_w_end;
        return d2 * d2;
    });
    if (signal) {
        report.checks.push_back(
            make_line("mean cycle length = E[max(beta, W_Y^2)]", length,
                      e_max_beta_wy2(beta, model)));
        report.checks.push_back(make_line("mean delta^4 = E[max(beta^2, W_Y^4)]", quartic,
                                          e_max_beta2_wy4(beta, model)));
    } else {
        report.checks.push_back(
            make_line("mean cycle length = E[max(beta, Y)]", length, e_max_beta_y(beta, model)));
        report.checks.push_back(
            make_line("mean delta^4 = 3 E[max(beta^2, Y^2)]", quartic,
                      3.0 * e_max_beta2_y2(beta, model)));
    }

    for (const CheckLine& c : report.checks) report.pass = report.pass && c.pass;
    return report;
}

IdentityReport age_equals_mse_for_signal_independent(const PolicySpec& policy,
                                                     const DelayModel& model, long long n_cycles,
                                                     double dt, std::uint64_t seed) {
    if (!policy.signal_independent())
        throw std::invalid_argument("age/mse equality holds only for signal-independent policies");
    SimulationResult res = run_cycles(policy, model, n_cycles, dt, seed);

    IdentityReport report;
    report.title = "age equals mse, " + policy.describe() + " over " + model.describe();
    CheckLine line;
    line.name = "time-average mse = time-average age";
    line.observed = res.mse.value;
    line.expected = res.age.value;
    // mse = age + noise with E[noise | sampling times] = 0, so
    // var(mse - age) = var(mse) - var(age); two stacked intervals bound a
    // ~4 sigma band for the difference
    line.tolerance = 2.0 * std::sqrt(res.mse.ci95 * res.mse.ci95 + res.age.ci95 * res.age.ci95);
    line.pass = std::abs(line.observed - line.expected) <= line.tolerance;
    report.checks.push_back(line);
    report.pass = line.pass;
    return report;
}

}  // namespace wsamp
