#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wsamp/delay_model.hpp"
#include "wsamp/simulator.hpp"
#include "wsamp/solver.hpp"
#include "wsamp/sweep.hpp"
#include "wsamp/verify.hpp"
#include "wsamp/version.hpp"

namespace {

using nlohmann::json;
using namespace wsamp;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string timestamp_line() {
    std::time_t now = std::time(nullptr);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return std::string("# generated ") + buf;
}

struct Common {
    std::string delay = "exp:1";
    std::string fmax = "inf";
    std::string format = "human";
    std::string config_path;
    std::uint64_t seed = 42;
    bool no_timestamp = false;
};

void add_common(CLI::App* sub, Common& c, bool with_model) {
    if (with_model) {
        sub->add_option("--delay", c.delay, "delay model: det:y | exp:mean | lognorm:sigma | "
                                            "scaled:d:inner | file:path");
        sub->add_option("--fmax", c.fmax, "sampling frequency cap (number or 'inf')");
    }
    sub->add_option("--format", c.format, "output format: human | csv | json")
        ->check(CLI::IsMember({"human", "csv", "json"}));
    sub->add_option("--seed", c.seed, "master RNG seed");
    sub->add_flag("--no-timestamp", c.no_timestamp, "omit the timestamp header line");
    sub->add_option("--config", c.config_path, "JSON config file; explicit flags win");
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    json j;
    in >> j;
    if (!j.is_object()) throw std::invalid_argument("config file must hold a JSON object");
    return j;
}

// flags passed on the command line override config file values
template <typename T>
void merge(const CLI::App* sub, const json& cfg, const char* flag, const char* key, T& value) {
    if (sub->count(flag) == 0 && cfg.contains(key)) value = cfg.at(key).get<T>();
}

void print_header(std::ostream& out, const char* command, const Common& c) {
    out << "# wsamp " << command << ' ' << kVersion << '\n';
    if (!c.no_timestamp) out << timestamp_line() << '\n';
}

// ------------------------------------------------------------------- solve

struct SolveArgs {
    Common common;
    double tol = 1e-9;
};

json solution_json(const ThresholdSolution& sol) {
    json j;
    j["beta"] = sol.beta;
    j["objective"] = sol.objective;
    j["binding"] = to_string(sol.binding);
    j["residual"] = sol.residual;
    j["iterations"] = sol.iterations;
    return j;
}

int cmd_solve(const SolveArgs& a) {
    DelayModel model = parse_delay_model(a.common.delay);
    FrequencyConstraint f = FrequencyConstraint::parse(a.common.fmax);

    ThresholdSolution mmse = solve_beta_mmse(model, f, a.tol);
    ThresholdSolution age = solve_beta_age(model, f, a.tol);
    bool zw_mmse = zero_wait_mmse_optimal(model);
    bool zw_age = zero_wait_age_optimal(model);

    std::ostream& out = std::cout;
    if (a.common.format == "human") {
        print_header(out, "solve", a.common);
        out << "seed " << a.common.seed << '\n';
        out << "delay " << model.describe() << '\n';
        out << "f_max " << f.describe() << '\n';
        out << "mmse-optimal beta " << fmt(mmse.beta) << " objective " << fmt(mmse.objective)
            << " binding " << to_string(mmse.binding) << " residual " << fmt(mmse.residual)
            << " iterations " << mmse.iterations << '\n';
        out << "age-optimal beta " << fmt(age.beta) << " objective " << fmt(age.objective)
            << " binding " << to_string(age.binding) << " residual " << fmt(age.residual)
            << " iterations " << age.iterations << '\n';
        out << "zero-wait-mmse-optimal " << (zw_mmse ? "true" : "false") << '\n';
        out << "zero-wait-age-optimal " << (zw_age ? "true" : "false") << '\n';
    } else if (a.common.format == "csv") {
        print_header(out, "solve", a.common);
        out << "solver,delay,f_max,seed,beta,objective,binding,residual,iterations,zero_wait_"
               "optimal\n";
        out << "mmse," << model.describe() << ',' << f.describe() << ',' << a.common.seed << ','
            << fmt(mmse.beta) << ',' << fmt(mmse.objective) << ',' << to_string(mmse.binding)
            << ',' << fmt(mmse.residual) << ',' << mmse.iterations << ','
            << (zw_mmse ? "true" : "false") << '\n';
        out << "age," << model.describe() << ',' << f.describe() << ',' << a.common.seed << ','
            << fmt(age.beta) << ',' << fmt(age.objective) << ',' << to_string(age.binding) << ','
            << fmt(age.residual) << ',' << age.iterations << ',' << (zw_age ? "true" : "false")
            << '\n';
    } else {
        json j;
        j["command"] = "solve";
        j["version"] = kVersion;
        j["seed"] = a.common.seed;
        j["delay"] = model.describe();
        j["f_max"] = f.describe();
        j["mmse_optimal"] = solution_json(mmse);
        j["age_optimal"] = solution_json(age);
        j["zero_wait_mmse_optimal"] = zw_mmse;
        j["zero_wait_age_optimal"] = zw_age;
        if (!a.common.no_timestamp) j["generated"] = timestamp_line().substr(12);
        out << j.dump(2) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimArgs {
    Common common;
    std::string policy = "zero-wait";
    long long cycles = 200'000;
    double dt = 0.0;
    long long queue_cap = 100'000;
};

PolicySpec resolve_policy(const std::string& text, const DelayModel& model,
                          FrequencyConstraint f) {
    if (text == "signal-threshold:auto")
        return PolicySpec::signal_threshold(solve_beta_mmse(model, f).beta);
    if (text == "age-threshold:auto")
        return PolicySpec::age_threshold(solve_beta_age(model, f).beta);
    return parse_policy(text);
}

int cmd_simulate(const SimArgs& a) {
    DelayModel model = parse_delay_model(a.common.delay);
    FrequencyConstraint f = FrequencyConstraint::parse(a.common.fmax);
    PolicySpec policy = resolve_policy(a.policy, model, f);
    double dt = a.dt > 0.0 ? a.dt : default_dt(policy, model);

    std::string note;
    if (policy.kind == PolicySpec::Kind::ZeroWait && !f.is_unbounded() &&
        model.mean() * f.f_max() < 1.0)
        note = "zero-wait rate 1/E[Y] exceeds f_max; the cap is not enforced here";

    SimOptions opt;
    opt.queue_cap = a.queue_cap;
    SimulationResult res = run_cycles_detailed(policy, model, a.cycles, dt, a.common.seed, opt).result;

    std::ostream& out = std::cout;
    if (a.common.format == "human") {
        print_header(out, "simulate", a.common);
        out << "seed " << res.seed << '\n';
        out << "policy " << res.policy << '\n';
        out << "delay " << res.delay << '\n';
        if (!note.empty()) out << "note " << note << '\n';
        out << "n_cycles " << res.n_cycles << '\n';
        out << "dt " << fmt(res.dt) << '\n';
        out << "mse " << fmt(res.mse.value) << " ci95 " << fmt(res.mse.ci95) << '\n';
        out << "age " << fmt(res.age.value) << " ci95 " << fmt(res.age.ci95) << '\n';
        out << "rate " << fmt(res.rate.value) << " ci95 " << fmt(res.rate.ci95) << '\n';
        out << "time_span " << fmt(res.time_span) << '\n';
        out << "divergent " << (res.divergent ? "true" : "false") << '\n';
        out << "max_queue_len " << res.max_queue_len << '\n';
    } else if (a.common.format == "csv") {
        print_header(out, "simulate", a.common);
        out << "policy,delay,seed,n_cycles,dt,mse,mse_ci95,age,age_ci95,rate,rate_ci95,"
               "time_span,divergent,max_queue_len\n";
        out << res.policy << ',' << res.delay << ',' << res.seed << ',' << res.n_cycles << ','
            << fmt(res.dt) << ',' << fmt(res.mse.value) << ',' << fmt(res.mse.ci95) << ','
            << fmt(res.age.value) << ',' << fmt(res.age.ci95) << ',' << fmt(res.rate.value) << ','
            << fmt(res.rate.ci95) << ',' << fmt(res.time_span) << ','
            << (res.divergent ? "true" : "false") << ',' << res.max_queue_len << '\n';
    } else {
        json j;
        j["command"] = "simulate";
        j["version"] = kVersion;
        j["seed"] = res.seed;
        j["policy"] = res.policy;
        j["delay"] = res.delay;
        if (!note.empty()) j["note"] = note;
        j["n_cycles"] = res.n_cycles;
        j["dt"] = res.dt;
        j["mse"] = res.mse.value;
        j["mse_ci95"] = res.mse.ci95;
        j["age"] = res.age.value;
        j["age_ci95"] = res.age.ci95;
        j["rate"] = res.rate.value;
        j["rate_ci95"] = res.rate.ci95;
        j["time_span"] = res.time_span;
        j["divergent"] = res.divergent;
        j["max_queue_len"] = res.max_queue_len;
        out << j.dump(2) << '\n';
    }
    return 0;
}

// ------------------------------------------------------------------- sweep

struct SweepArgs {
    Common common;
    std::string kind = "fmax-sweep";
    std::vector<double> grid;
    std::vector<std::string> policies;
    long long cycles = 200'000;
    double dt = 0.0;
    std::string out_path;
};

PolicySpec::Kind policy_kind_from_token(const std::string& token) {
    if (token == "signal-threshold" || token == "signal_threshold")
        return PolicySpec::Kind::SignalThreshold;
    if (token == "age-threshold" || token == "age_threshold") return PolicySpec::Kind::AgeThreshold;
    if (token == "zero-wait" || token == "zero_wait") return PolicySpec::Kind::ZeroWait;
    if (token == "uniform") return PolicySpec::Kind::Uniform;
    throw std::invalid_argument("unknown policy name: " + token);
}

json cell_json(const PolicyCell& cell) {
    json j;
    j["flag"] = to_string(cell.flag);
    auto put = [&](const char* key, double v) {
        if (std::isnan(v))
            j[key] = nullptr;
        else
            j[key] = v;
    };
    put("beta", cell.beta);
    put("analytic", cell.analytic);
    put("mse", cell.mse);
    put("mse_ci95", cell.mse_ci95);
    put("age", cell.age);
    put("age_ci95", cell.age_ci95);
    put("rate", cell.rate);
    if (!cell.error.empty()) j["error"] = cell.error;
    return j;
}

int cmd_sweep(const SweepArgs& a) {
    SweepConfig config;
    config.kind = sweep_kind_from_string(a.kind);
    config.model_template = parse_delay_model(a.common.delay);
    config.grid = a.grid.empty() ? SweepConfig::default_grid(config.kind) : a.grid;
    if (!a.policies.empty()) {
        config.policies.clear();
        for (const std::string& token : a.policies)
            config.policies.push_back(policy_kind_from_token(token));
    }
    config.f_max = FrequencyConstraint::parse(a.common.fmax);
    config.n_cycles = a.cycles;
    config.dt = a.dt;
    config.seed = a.common.seed;
    config.output_path = a.out_path;

    SweepTable table = run_sweep(config);

    std::ostream& out = std::cout;
    if (a.common.format == "json") {
        json j;
        j["command"] = "sweep";
        j["version"] = kVersion;
        j["meta"] = json::parse(sweep_sidecar_json(config));
        json rows = json::array();
        for (const SweepRow& row : table.rows) {
            json r;
            r["parameter"] = row.parameter;
            for (PolicySpec::Kind kind : table.policies)
                r[sweep_policy_token(kind)] =
                    cell_json(row.cells[static_cast<size_t>(
                        std::find(kSweepPolicyOrder.begin(), kSweepPolicyOrder.end(), kind) -
                        kSweepPolicyOrder.begin())]);
            if (!std::isnan(row.ratio)) r["mmse_ratio"] = row.ratio;
            rows.push_back(r);
        }
        j["rows"] = rows;
        out << j.dump(2) << '\n';
    } else {
        print_header(out, "sweep", a.common);
        out << "# seed " << config.seed << " kind " << a.kind << " model "
            << config.model_template.describe() << " f_max " << config.f_max.describe() << '\n';
        out << sweep_csv(table);
    }
    return 0;
}

// ------------------------------------------------------------------ verify

struct VerifyArgs {
    Common common;
    long long runs = 200'000;
    long long cycles = 100'000;
    double dt = 1e-3;
};

int cmd_verify(const VerifyArgs& a) {
    VerifyOptions options;
    options.n_runs = a.runs;
    options.n_cycles = a.cycles;
    options.dt = a.dt;
    options.seed = a.common.seed;

    VerifyResult result = run_verify(options);

    std::ostream& out = std::cout;
    if (a.common.format == "human") {
        print_header(out, "verify", a.common);
        out << "seed " << options.seed << '\n';
        out << verify_text(result);
    } else if (a.common.format == "csv") {
        print_header(out, "verify", a.common);
        out << "suite,check,observed,expected,tolerance,pass\n";
        for (const IdentityReport& r : result.reports)
            for (const CheckLine& c : r.checks)
                out << '"' << r.title << "\",\"" << c.name << "\"," << fmt(c.observed) << ','
                    << fmt(c.expected) << ',' << fmt(c.tolerance) << ','
                    << (c.pass ? "true" : "false") << '\n';
    } else {
        json j;
        j["command"] = "verify";
        j["version"] = kVersion;
        j["seed"] = options.seed;
        j["n_runs"] = options.n_runs;
        j["n_cycles"] = options.n_cycles;
        j["dt"] = options.dt;
        json reports = json::array();
        for (const IdentityReport& r : result.reports) {
            json jr;
            jr["title"] = r.title;
            jr["pass"] = r.pass;
            json checks = json::array();
            for (const CheckLine& c : r.checks) {
                json jc;
                jc["check"] = c.name;
                jc["observed"] = c.observed;
                jc["expected"] = c.expected;
                jc["tolerance"] = c.tolerance;
                jc["pass"] = c.pass;
                checks.push_back(jc);
            }
            jr["checks"] = checks;
            reports.push_back(jr);
        }
        j["reports"] = reports;
        j["failures"] = result.failures;
        out << j.dump(2) << '\n';
    }
    return result.failures == 0 ? 0 : 10 + result.failures;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"threshold sampling of a Wiener process over a random-delay channel"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    CLI::App* solve = app.add_subcommand("solve", "solve the optimal thresholds for a model");
    add_common(solve, solve_args.common, true);
    solve->add_option("--tol", solve_args.tol, "bisection tolerance on the normalized residual");

    SimArgs sim_args;
    CLI::App* simulate = app.add_subcommand("simulate", "run one simulation");
    add_common(simulate, sim_args.common, true);
    simulate->add_option("--policy", sim_args.policy,
                         "uniform:x | zero-wait | age-threshold:b|auto | signal-threshold:b|auto");
    simulate->add_option("--cycles", sim_args.cycles, "recorded cycles");
    simulate->add_option("--dt", sim_args.dt, "time step (0: auto)");
    simulate->add_option("--queue-cap", sim_args.queue_cap,
                         "uniform-policy queue length that flags divergence");

    SweepArgs sweep_args;
    CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep, emit CSV");
    add_common(sweep, sweep_args.common, true);
    sweep->add_option("--kind", sweep_args.kind, "fmax-sweep | sigma-sweep | scale-sweep");
    sweep->add_option("--grid", sweep_args.grid, "grid values (default per kind)")->delimiter(',');
    sweep->add_option("--policies", sweep_args.policies,
                      "subset of signal-threshold,age-threshold,zero-wait,uniform")
        ->delimiter(',');
    sweep->add_option("--cycles", sweep_args.cycles, "cycles per grid point");
    sweep->add_option("--dt", sweep_args.dt, "time step (0: auto)");
    sweep->add_option("--out", sweep_args.out_path, "CSV output path (sidecar: .json)");

    VerifyArgs verify_args;
    CLI::App* verify = app.add_subcommand("verify", "run the identity-check suites");
    add_common(verify, verify_args.common, false);
    verify->add_option("--runs", verify_args.runs, "Monte Carlo runs per stopping-time suite");
    verify->add_option("--cycles", verify_args.cycles, "cycles per simulation suite");
    verify->add_option("--dt", verify_args.dt, "time step");

    try {
        app.parse(argc, argv);

        if (solve->parsed()) {
            json cfg = load_config(solve_args.common.config_path);
            merge(solve, cfg, "--delay", "delay", solve_args.common.delay);
            merge(solve, cfg, "--fmax", "fmax", solve_args.common.fmax);
            merge(solve, cfg, "--format", "format", solve_args.common.format);
            merge(solve, cfg, "--seed", "seed", solve_args.common.seed);
            merge(solve, cfg, "--tol", "tol", solve_args.tol);
            return cmd_solve(solve_args);
        }
        if (simulate->parsed()) {
            json cfg = load_config(sim_args.common.config_path);
            merge(simulate, cfg, "--delay", "delay", sim_args.common.delay);
            merge(simulate, cfg, "--fmax", "fmax", sim_args.common.fmax);
            merge(simulate, cfg, "--format", "format", sim_args.common.format);
            merge(simulate, cfg, "--seed", "seed", sim_args.common.seed);
            merge(simulate, cfg, "--policy", "policy", sim_args.policy);
            merge(simulate, cfg, "--cycles", "cycles", sim_args.cycles);
            merge(simulate, cfg, "--dt", "dt", sim_args.dt);
            merge(simulate, cfg, "--queue-cap", "queue_cap", sim_args.queue_cap);
            return cmd_simulate(sim_args);
        }
        if (sweep->parsed()) {
            json cfg = load_config(sweep_args.common.config_path);
            merge(sweep, cfg, "--delay", "delay", sweep_args.common.delay);
            merge(sweep, cfg, "--fmax", "fmax", sweep_args.common.fmax);
            merge(sweep, cfg, "--format", "format", sweep_args.common.format);
            merge(sweep, cfg, "--seed", "seed", sweep_args.common.seed);
            merge(sweep, cfg, "--kind", "kind", sweep_args.kind);
            merge(sweep, cfg, "--grid", "grid", sweep_args.grid);
            merge(sweep, cfg, "--policies", "policies", sweep_args.policies);
            merge(sweep, cfg, "--cycles", "cycles", sweep_args.cycles);
            merge(sweep, cfg, "--dt", "dt", sweep_args.dt);
            merge(sweep, cfg, "--out", "out", sweep_args.out_path);
            return cmd_sweep(sweep_args);
        }
        json cfg = load_config(verify_args.common.config_path);
        merge(verify, cfg, "--format", "format", verify_args.common.format);
        merge(verify, cfg, "--seed", "seed", verify_args.common.seed);
        merge(verify, cfg, "--runs", "runs", verify_args.runs);
        merge(verify, cfg, "--cycles", "cycles", verify_args.cycles);
        merge(verify, cfg, "--dt", "dt", verify_args.dt);
        return cmd_verify(verify_args);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
