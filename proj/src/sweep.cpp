#include "wsamp/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "wsamp/rng.hpp"
#include "wsamp/version.hpp"

namespace wsamp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_cell(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Stored values carry exactly the precision the CSV does, so serialization
// loses nothing.
double snap12(double v) {
    if (std::isnan(v)) return v;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

double parse_cell(const std::string& s) {
    if (s.empty()) return kNaN;
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad numeric cell: " + s);
    return v;
}

}  // namespace

std::string to_string(SweepKind kind) {
    switch (kind) {
        case SweepKind::FmaxSweep: return "fmax-sweep";
        case SweepKind::SigmaSweep: return "sigma-sweep";
        case SweepKind::ScaleSweep: return "scale-sweep";
    }
    return "?";
}

SweepKind sweep_kind_from_string(const std::string& text) {
    if (text == "fmax-sweep") return SweepKind::FmaxSweep;
    if (text == "sigma-sweep") return SweepKind::SigmaSweep;
    if (text == "scale-sweep") return SweepKind::ScaleSweep;
    throw std::invalid_argument("unknown sweep kind: " + text);
}

std::string to_string(Feasibility flag) {
    switch (flag) {
        case Feasibility::Feasible: return "feasible";
        case Feasibility::Infeasible: return "infeasible";
        case Feasibility::Divergent: return "divergent";
    }
    return "?";
}

Feasibility feasibility_from_string(const std::string& text) {
    if (text == "feasible") return Feasibility::Feasible;
    if (text == "infeasible") return Feasibility::Infeasible;
    if (text == "divergent") return Feasibility::Divergent;
    throw std::invalid_argument("unknown feasibility flag: " + text);
}

const char* sweep_policy_token(PolicySpec::Kind kind) {
    switch (kind) {
        case PolicySpec::Kind::SignalThreshold: return "signal_threshold";
        case PolicySpec::Kind::AgeThreshold: return "age_threshold";
        case PolicySpec::Kind::ZeroWait: return "zero_wait";
        case PolicySpec::Kind::Uniform: return "uniform";
    }
    return "?";
}

PolicyCell::PolicyCell()
    : beta(kNaN), analytic(kNaN), mse(kNaN), mse_ci95(kNaN), age(kNaN), age_ci95(kNaN),
      rate(kNaN) {}

SweepRow::SweepRow() : ratio(kNaN) {}

std::vector<double> SweepConfig::default_grid(SweepKind kind) {
    std::vector<double> grid;
    switch (kind) {
        case SweepKind::FmaxSweep: {
            const int n = 24;
            const double lo = 0.01, hi = 2.0;
            for (int i = 0; i < n; ++i)
                grid.push_back(lo * std::exp(std::log(hi / lo) * i / (n - 1)));
            grid.front() = lo;
            grid.back() = hi;
            break;
        }
        case SweepKind::SigmaSweep: {
            const int n = 15;
            const double lo = 0.05, hi = 1.5;
            for (int i = 0; i < n; ++i) grid.push_back(lo + (hi - lo) * i / (n - 1));
            grid.back() = hi;
            break;
        }
        case SweepKind::ScaleSweep: {
            const int n = 9;
            const double lo = 0.1, hi = 10.0;
            for (int i = 0; i < n; ++i)
                grid.push_back(lo * std::exp(std::log(hi / lo) * i / (n - 1)));
            grid.front() = lo;
            grid.back() = hi;
            break;
        }
    }
    return grid;
}

namespace {

int slot_of(PolicySpec::Kind kind) {
    for (int i = 0; i < 4; ++i)
        if (kSweepPolicyOrder[static_cast<size_t>(i)] == kind) return i;
    return -1;
}

void validate_config(const SweepConfig& c) {
    if (c.grid.empty()) throw std::invalid_argument("sweep grid must be nonempty");
    for (size_t i = 0; i + 1 < c.grid.size(); ++i)
        if (!(c.grid[i] < c.grid[i + 1]))
            throw std::invalid_argument("sweep grid must be strictly increasing");
    for (double p : c.grid) {
        if (!std::isfinite(p)) throw std::invalid_argument("sweep grid values must be finite");
        if (c.kind == SweepKind::FmaxSweep && !(p > 0.0))
            throw std::invalid_argument("fmax-sweep grid values must be > 0");
        if (c.kind == SweepKind::SigmaSweep && !(p > 0.0))
            throw std::invalid_argument("sigma-sweep grid values must be > 0");
        if (c.kind == SweepKind::ScaleSweep && !(p >= 0.0))
            throw std::invalid_argument("scale-sweep grid values must be >= 0");
    }
    if (c.policies.empty()) throw std::invalid_argument("sweep needs at least one policy");
    for (size_t i = 0; i < c.policies.size(); ++i)
        for (size_t j = i + 1; j < c.policies.size(); ++j)
            if (c.policies[i] == c.policies[j])
                throw std::invalid_argument("duplicate policy in sweep config");
    if (c.n_cycles < 1000) throw std::invalid_argument("n_cycles must be >= 1000");
    if (c.dt < 0.0 || !std::isfinite(c.dt)) throw std::invalid_argument("dt must be >= 0");
}

struct PointSetup {
    DelayModel model;
    FrequencyConstraint f;
};

PointSetup resolve_point(const SweepConfig& c, double p) {
    switch (c.kind) {
        case SweepKind::FmaxSweep: return {c.model_template, FrequencyConstraint::at(p)};
        case SweepKind::SigmaSweep: return {DelayModel::lognormal_normalized(p), c.f_max};
        case SweepKind::ScaleSweep: return {DelayModel::scaled(c.model_template, p), c.f_max};
    }
    throw std::logic_error("unreachable sweep kind");
}

void simulate_into(PolicyCell& cell, const PolicySpec& spec, const PointSetup& pt,
                   const SweepConfig& c, std::uint64_t seed) {
    double dt = c.dt > 0.0 ? c.dt : default_dt(spec, pt.model);
    SimulationResult res = run_cycles(spec, pt.model, c.n_cycles, dt, seed);
    cell.mse = snap12(res.mse.value);
    cell.mse_ci95 = snap12(res.mse.ci95);
    cell.age = snap12(res.age.value);
    cell.age_ci95 = snap12(res.age.ci95);
    cell.rate = snap12(res.rate.value);
    if (res.divergent) cell.flag = Feasibility::Divergent;
}

void fill_cell(PolicyCell& cell, PolicySpec::Kind kind, const PointSetup& pt,
               const SweepConfig& c, std::uint64_t seed) {
    switch (kind) {
        case PolicySpec::Kind::SignalThreshold: {
            ThresholdSolution sol = solve_beta_mmse(pt.model, pt.f);
            cell.beta = snap12(sol.beta);
            cell.analytic = snap12(sol.objective);
            simulate_into(cell, PolicySpec::signal_threshold(sol.beta), pt, c, seed);
            return;
        }
        case PolicySpec::Kind::AgeThreshold: {
            ThresholdSolution sol = solve_beta_age(pt.model, pt.f);
            cell.beta = snap12(sol.beta);
            cell.analytic = snap12(sol.objective);
            simulate_into(cell, PolicySpec::age_threshold(sol.beta), pt, c, seed);
            return;
        }
        case PolicySpec::Kind::ZeroWait: {
            double m = pt.model.mean();
            // zero-wait samples at rate 1/E[Y]; feasible only under the cap
            if (!(m > 0.0) || (!pt.f.is_unbounded() && pt.f.f_max() * m < 1.0)) {
                cell.flag = Feasibility::Infeasible;
                return;
            }
            cell.analytic = snap12(m + pt.model.second_moment() / (2.0 * m));
            simulate_into(cell, PolicySpec::zero_wait(), pt, c, seed);
            return;
        }
        case PolicySpec::Kind::Uniform: {
            // deterministic arrivals at f_max; unstable at or above capacity
            if (pt.f.is_unbounded() ||
                (pt.model.mean() > 0.0 && pt.f.f_max() * pt.model.mean() >= 1.0)) {
                cell.flag = Feasibility::Infeasible;
                return;
            }
            simulate_into(cell, PolicySpec::uniform(1.0 / pt.f.f_max()), pt, c, seed);
            return;
        }
    }
}

SweepRow compute_row(const SweepConfig& c, size_t index) {
    SweepRow row;
    row.parameter = snap12(c.grid[index]);
    PointSetup pt = resolve_point(c, c.grid[index]);
    std::uint64_t point_seed = derive_seed(c.seed, static_cast<std::uint64_t>(index));

    for (PolicySpec::Kind kind : c.policies) {
        int slot = slot_of(kind);
        PolicyCell& cell = row.cells[static_cast<size_t>(slot)];
        cell.present = true;
        try {
            fill_cell(cell, kind, pt, c, derive_seed(point_seed, static_cast<std::uint64_t>(slot)));
        } catch (const std::exception& e) {
            std::string note = e.what();
            cell = PolicyCell();
            cell.present = true;
            cell.flag = Feasibility::Infeasible;
            cell.error = note;
        }
    }

    const PolicyCell& sig = row.cells[0];
    const PolicyCell& age = row.cells[1];
    if (sig.present && age.present && !std::isnan(sig.analytic) && !std::isnan(age.analytic))
        row.ratio = snap12(sig.analytic / age.analytic);
    return row;
}

size_t worker_count(size_t jobs) {
    size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("WSAMP_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = static_cast<size_t>(v);
    }
    return std::min(n, jobs);
}

}  // namespace

SweepTable run_sweep(const SweepConfig& config) {
    validate_config(config);

    SweepTable table;
    for (PolicySpec::Kind kind : kSweepPolicyOrder)
        if (std::find(config.policies.begin(), config.policies.end(), kind) !=
            config.policies.end())
            table.policies.push_back(kind);
    table.rows.resize(config.grid.size());

    const size_t n = config.grid.size();
    const size_t workers = worker_count(n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) table.rows[i] = compute_row(config, i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                    table.rows[i] = compute_row(config, i);
            });
        for (std::thread& t : pool) t.join();
    }

    if (!config.output_path.empty()) write_sweep_outputs(config, table);
    return table;
}

namespace {

bool has_beta_column(PolicySpec::Kind kind) {
    return kind == PolicySpec::Kind::SignalThreshold || kind == PolicySpec::Kind::AgeThreshold;
}

bool has_analytic_column(PolicySpec::Kind kind) { return kind != PolicySpec::Kind::Uniform; }

bool table_has_ratio(const std::vector<PolicySpec::Kind>& policies) {
    return std::find(policies.begin(), policies.end(), PolicySpec::Kind::SignalThreshold) !=
               policies.end() &&
           std::find(policies.begin(), policies.end(), PolicySpec::Kind::AgeThreshold) !=
               policies.end();
}

}  // namespace

std::string sweep_csv(const SweepTable& table) {
    std::ostringstream out;
    out << "parameter";
    for (PolicySpec::Kind kind : table.policies) {
        const char* p = sweep_policy_token(kind);
        if (has_beta_column(kind)) out << ',' << p << "_beta";
        if (has_analytic_column(kind)) out << ',' << p << "_analytic";
        out << ',' << p << "_mse" << ',' << p << "_mse_ci95" << ',' << p << "_age" << ',' << p
            << "_age_ci95" << ',' << p << "_rate" << ',' << p << "_flag";
    }
    const bool ratio = table_has_ratio(table.policies);
    if (ratio) out << ",mmse_ratio";
    out << '\n';

    for (const SweepRow& row : table.rows) {
        out << format_cell(row.parameter);
        for (PolicySpec::Kind kind : table.policies) {
            const PolicyCell& cell = row.cells[static_cast<size_t>(slot_of(kind))];
            if (has_beta_column(kind)) out << ',' << format_cell(cell.beta);
            if (has_analytic_column(kind)) out << ',' << format_cell(cell.analytic);
            out << ',' << format_cell(cell.mse) << ',' << format_cell(cell.mse_ci95) << ','
                << format_cell(cell.age) << ',' << format_cell(cell.age_ci95) << ','
                << format_cell(cell.rate) << ',' << to_string(cell.flag);
        }
        if (ratio) out << ',' << format_cell(row.ratio);
        out << '\n';
    }
    return out.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

SweepTable parse_sweep_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty sweep CSV");
    std::vector<std::string> header = split_csv_line(line);
    if (header.empty() || header[0] != "parameter")
        throw std::invalid_argument("sweep CSV must start with a parameter column");

    SweepTable table;
    size_t col = 1;
    for (PolicySpec::Kind kind : kSweepPolicyOrder) {
        std::string p = sweep_policy_token(kind);
        if (col < header.size() && header[col].rfind(p + "_", 0) == 0) {
            table.policies.push_back(kind);
            size_t expect = 6 + (has_beta_column(kind) ? 1 : 0) + (has_analytic_column(kind) ? 1 : 0);
            col += expect;
        }
    }
    bool ratio = col < header.size() && header[col] == "mmse_ratio";
    if (ratio) ++col;
    if (col != header.size()) throw std::invalid_argument("unrecognized sweep CSV columns");

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::invalid_argument("sweep CSV row width mismatch");
        SweepRow row;
        size_t i = 0;
        row.parameter = parse_cell(cells[i++]);
        for (PolicySpec::Kind kind : table.policies) {
            PolicyCell& cell = row.cells[static_cast<size_t>(slot_of(kind))];
            cell.present = true;
            if (has_beta_column(kind)) cell.beta = parse_cell(cells[i++]);
            if (has_analytic_column(kind)) cell.analytic = parse_cell(cells[i++]);
            cell.mse = parse_cell(cells[i++]);
            cell.mse_ci95 = parse_cell(cells[i++]);
            cell.age = parse_cell(cells[i++]);
            cell.age_ci95 = parse_cell(cells[i++]);
            cell.rate = parse_cell(cells[i++]);
            cell.flag = feasibility_from_string(cells[i++]);
        }
        if (ratio) row.ratio = parse_cell(cells[i++]);
        table.rows.push_back(row);
    }
    return table;
}

namespace {

bool same_value(double a, double b) {
    if (std::isnan(a) && std::isnan(b)) return true;
    return a == b;
}

}  // namespace

bool sweep_tables_equal(const SweepTable& a, const SweepTable& b) {
    if (a.policies != b.policies || a.rows.size() != b.rows.size()) return false;
    for (size_t r = 0; r < a.rows.size(); ++r) {
        const SweepRow& x = a.rows[r];
        const SweepRow& y = b.rows[r];
        if (!same_value(x.parameter, y.parameter) || !same_value(x.ratio, y.ratio)) return false;
        for (size_t s = 0; s < 4; ++s) {
            const PolicyCell& cx = x.cells[s];
            const PolicyCell& cy = y.cells[s];
            if (cx.present != cy.present || cx.flag != cy.flag) return false;
            if (!same_value(cx.beta, cy.beta) || !same_value(cx.analytic, cy.analytic) ||
                !same_value(cx.mse, cy.mse) || !same_value(cx.mse_ci95, cy.mse_ci95) ||
                !same_value(cx.age, cy.age) || !same_value(cx.age_ci95, cy.age_ci95) ||
                !same_value(cx.rate, cy.rate))
                return false;
        }
    }
    return true;
}

std::string sweep_sidecar_json(const SweepConfig& config) {
    nlohmann::json j;
    j["kind"] = to_string(config.kind);
    j["model"] = config.model_template.describe();
    j["grid"] = config.grid;
    std::vector<std::string> policies;
    for (PolicySpec::Kind kind : kSweepPolicyOrder)
        if (std::find(config.policies.begin(), config.policies.end(), kind) !=
            config.policies.end())
            policies.emplace_back(sweep_policy_token(kind));
    j["policies"] = policies;
    if (config.f_max.is_unbounded())
        j["f_max"] = "inf";
    else
        j["f_max"] = config.f_max.f_max();
    j["n_cycles"] = config.n_cycles;
    j["dt"] = config.dt;
    j["seed"] = config.seed;
    j["version"] = kVersion;
    j["output"] = config.output_path;
    return j.dump(2) + "\n";
}

namespace {

std::string sidecar_path(const std::string& csv_path) {
    if (csv_path.size() > 4 && csv_path.substr(csv_path.size() - 4) == ".csv")
        return csv_path.substr(0, csv_path.size() - 4) + ".json";
    return csv_path + ".json";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void write_sweep_outputs(const SweepConfig& config, const SweepTable& table) {
    if (config.output_path.empty()) throw std::invalid_argument("sweep output path is empty");
    write_file(config.output_path, sweep_csv(table));
    write_file(sidecar_path(config.output_path), sweep_sidecar_json(config));
}

namespace {

void check_decades(const std::vector<double>& grid) {
    if (grid.size() < 2) throw std::invalid_argument("asymptotic grid needs >= 2 points");
    for (size_t i = 0; i + 1 < grid.size(); ++i)
        if (!(grid[i] < grid[i + 1]))
            throw std::invalid_argument("asymptotic grid must be strictly increasing");
    if (!(grid.front() > 0.0)) throw std::invalid_argument("asymptotic grid must be positive");
    if (grid.back() / grid.front() < 100.0)
        throw std::invalid_argument("asymptotic grid must span at least two decades");
}

}  // namespace

AsymptoticReport asymptotic_low_frequency(const DelayModel& model,
                                          const std::vector<double>& fmax_grid) {
    check_decades(fmax_grid);
    AsymptoticReport report;
    report.low_frequency = true;
    for (double f : fmax_grid) {
        ThresholdSolution sol = solve_beta_mmse(model, FrequencyConstraint::at(f));
        report.rows.push_back({f, sol.beta, sol.beta * f, sol.objective * 6.0 * f});
    }
    return report;
}

AsymptoticReport asymptotic_scale(const DelayModel& base, const std::vector<double>& d_grid) {
    check_decades(d_grid);
    AsymptoticReport report;
    report.low_frequency = false;
    const double beta_base = solve_beta_age(base, FrequencyConstraint::unbounded()).beta;
    for (double d : d_grid) {
        ThresholdSolution sol =
            solve_beta_age(DelayModel::scaled(base, d), FrequencyConstraint::unbounded());
        report.rows.push_back({d, sol.beta, sol.beta / (d * beta_base), kNaN});
    }
    return report;
}

std::string asymptotic_csv(const AsymptoticReport& report) {
    std::ostringstream out;
    if (report.low_frequency)
        out << "f_max,beta,beta_times_fmax,objective_times_6fmax\n";
    else
        out << "d,beta,beta_scaling_ratio\n";
    for (const AsymptoticRow& row : report.rows) {
        out << format_cell(row.parameter) << ',' << format_cell(row.beta) << ','
            << format_cell(row.ratio_primary);
        if (report.low_frequency) out << ',' << format_cell(row.ratio_secondary);
        out << '\n';
    }
    return out.str();
}

}  // namespace wsamp
