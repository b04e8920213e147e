#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "wsamp/sweep.hpp"

using nlohmann::json;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

std::string cli_binary() {
    const char* bin = std::getenv("WSAMP_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "WSAMP_BIN must point at the wsamp binary");
    return bin;
}

// Captures stdout; stderr is dropped unless merged. The exit code is the
// process exit status, -1 on abnormal termination.
CliResult run_cli(const std::string& args, bool merge_stderr = false) {
    std::string cmd = cli_binary() + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult r;
    char buf[4096];
    size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    int status = pclose(pipe);
    REQUIRE(status != -1);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

bool has_line(const std::string& text, const std::string& wanted) {
    for (const std::string& line : lines_of(text))
        if (line == wanted) return true;
    return false;
}

bool has_line_prefix(const std::string& text, const std::string& prefix) {
    for (const std::string& line : lines_of(text))
        if (line.rfind(prefix, 0) == 0) return true;
    return false;
}

// First numeric token following `label` on the line that starts with it.
double value_after(const std::string& text, const std::string& label) {
    for (const std::string& line : lines_of(text)) {
        if (line.rfind(label + ' ', 0) != 0) continue;
        std::istringstream in(line.substr(label.size()));
        double v = 0.0;
        REQUIRE(static_cast<bool>(in >> v));
        return v;
    }
    FAIL("no line starts with '" << label << " '");
    return 0.0;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string strip_header_lines(const std::string& text, int n) {
    std::string::size_type pos = 0;
    for (int i = 0; i < n; ++i) {
        pos = text.find('\n', pos);
        REQUIRE(pos != std::string::npos);
        ++pos;
    }
    return text.substr(pos);
}

}  // namespace

TEST_CASE("cli solve: human output for the default model") {
    CliResult r = run_cli("solve --no-timestamp");
    REQUIRE(r.code == 0);
    auto ls = lines_of(r.out);
    REQUIRE(ls.size() == 8);
    CHECK(ls[0] == "# wsamp solve 0.1.0");
    CHECK(ls[1] == "seed 42");
    CHECK(ls[2] == "delay exp:1");
    CHECK(ls[3] == "f_max inf");
    CHECK(ls[4].rfind("mmse-optimal beta ", 0) == 0);
    CHECK(ls[5].rfind("age-optimal beta ", 0) == 0);
    CHECK(ls[6] == "zero-wait-mmse-optimal false");
    CHECK(ls[7] == "zero-wait-age-optimal false");

    std::istringstream mm(ls[4]), ag(ls[5]);
    std::string w_policy, w_beta, w_obj, w_bind, w_res, w_it;
    double beta = 0.0, obj = 0.0, res = 0.0;
    std::string binding;
    long long iters = 0;
    REQUIRE(static_cast<bool>(mm >> w_policy >> w_beta >> beta >> w_obj >> obj >> w_bind >>
                              binding >> w_res >> res >> w_it >> iters));
    CHECK(beta == doctest::Approx(1.8981231525518698).epsilon(1e-7));
    CHECK(obj == doctest::Approx(1.6327077175172913).epsilon(1e-9));
    CHECK(binding == "unconstrained-stationarity");
    CHECK(res <= 1e-9);
    CHECK(iters > 0);
    REQUIRE(static_cast<bool>(ag >> w_policy >> w_beta >> beta >> w_obj >> obj >> w_bind >>
                              binding >> w_res >> res >> w_it >> iters));
    CHECK(beta == doctest::Approx(0.9012010317296661).epsilon(1e-7));
    CHECK(obj == doctest::Approx(1.901201031729666).epsilon(1e-9));
    CHECK(binding == "unconstrained-stationarity");
}

TEST_CASE("cli solve: timestamp header appears unless suppressed") {
    CliResult r = run_cli("solve --delay det:1");
    REQUIRE(r.code == 0);
    auto ls = lines_of(r.out);
    REQUIRE(ls.size() >= 2);
    CHECK(ls[0] == "# wsamp solve 0.1.0");
    CHECK(ls[1].rfind("# generated 20", 0) == 0);
    CHECK(ls[1].back() == 'Z');
    CHECK(has_line(r.out, "zero-wait-age-optimal true"));
    CHECK(has_line(r.out, "zero-wait-mmse-optimal false"));
}

TEST_CASE("cli solve: frequency-bound degenerate model is exact in csv") {
    CliResult r = run_cli("solve --delay det:0 --fmax 2 --format csv --no-timestamp");
    REQUIRE(r.code == 0);
    auto ls = lines_of(r.out);
    REQUIRE(ls.size() == 4);
    CHECK(ls[0] == "# wsamp solve 0.1.0");
    CHECK(ls[1] ==
          "solver,delay,f_max,seed,beta,objective,binding,residual,iterations,zero_wait_optimal");
    CHECK(ls[2] == "mmse,det:0,2,42,0.5,0.0833333333333,frequency-constraint,0,0,true");
    CHECK(ls[3] == "age,det:0,2,42,0.5,0.25,frequency-constraint,0,0,true");
}

TEST_CASE("cli solve: json document") {
    CliResult r = run_cli("solve --format json --no-timestamp");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j.at("command") == "solve");
    CHECK(j.at("version") == "0.1.0");
    CHECK(j.at("seed") == 42);
    CHECK(j.at("delay") == "exp:1");
    CHECK(j.at("f_max") == "inf");
    CHECK(j.at("mmse_optimal").at("beta").get<double>() ==
          doctest::Approx(1.8981231525518698).epsilon(1e-7));
    CHECK(j.at("mmse_optimal").at("binding") == "unconstrained-stationarity");
    CHECK(j.at("age_optimal").at("objective").get<double>() ==
          doctest::Approx(1.901201031729666).epsilon(1e-9));
    CHECK(j.at("zero_wait_mmse_optimal") == false);
    CHECK(j.at("zero_wait_age_optimal") == false);
    CHECK(!j.contains("generated"));

    CliResult stamped = run_cli("solve --format json");
    REQUIRE(stamped.code == 0);
    json js = json::parse(stamped.out);
    REQUIRE(js.contains("generated"));
    CHECK(js.at("generated").get<std::string>().rfind("20", 0) == 0);
}

TEST_CASE("cli: exit codes") {
    SUBCASE("usage errors exit 1") {
        CHECK(run_cli("", true).code == 1);
        CHECK(run_cli("frobnicate", true).code == 1);
        CHECK(run_cli("solve --bogus-flag", true).code == 1);
        CHECK(run_cli("solve --format yaml", true).code == 1);
    }
    SUBCASE("bad model exits 1 with a message") {
        CliResult r = run_cli("solve --delay gauss:1", true);
        CHECK(r.code == 1);
        CHECK(r.out.find("error:") != std::string::npos);
    }
    SUBCASE("missing config file exits 1") {
        CliResult r = run_cli("solve --config /nonexistent/wsamp.json", true);
        CHECK(r.code == 1);
        CHECK(r.out.find("cannot open config file") != std::string::npos);
    }
    SUBCASE("unreachable tolerance exits 2") {
        // quadrature rounding keeps the residual above 1e-30 for lognormal
        CliResult r = run_cli("solve --delay lognorm:1 --tol 1e-30", true);
        CHECK(r.code == 2);
        CHECK(r.out.find("solver failure:") != std::string::npos);
    }
    SUBCASE("--help exits 0") {
        CliResult r = run_cli("--help");
        CHECK(r.code == 0);
        CHECK(r.out.find("solve") != std::string::npos);
        CHECK(r.out.find("simulate") != std::string::npos);
        CHECK(r.out.find("sweep") != std::string::npos);
        CHECK(r.out.find("verify") != std::string::npos);
        CHECK(run_cli("solve --help").code == 0);
    }
}

TEST_CASE("cli simulate: zero-wait run matches the analytic objective") {
    CliResult r = run_cli("simulate --policy zero-wait --cycles 2000 --dt 0.002 --seed 5 "
                          "--no-timestamp");
    REQUIRE(r.code == 0);
    auto ls = lines_of(r.out);
    CHECK(ls[0] == "# wsamp simulate 0.1.0");
    CHECK(has_line(r.out, "seed 5"));
    CHECK(has_line(r.out, "policy zero-wait"));
    CHECK(has_line(r.out, "delay exp:1"));
    CHECK(has_line(r.out, "n_cycles 2000"));
    CHECK(has_line(r.out, "dt 0.002"));
    CHECK(has_line(r.out, "divergent false"));
    CHECK(has_line(r.out, "max_queue_len 1"));
    CHECK(r.out.find("note") == std::string::npos);

    // exp(1): mse = age = E[Y^2]/(2 E[Y]) + E[Y] = 2, rate = 1
    CHECK(value_after(r.out, "mse") == doctest::Approx(2.0).epsilon(0.15));
    CHECK(value_after(r.out, "age") == doctest::Approx(2.0).epsilon(0.15));
    CHECK(value_after(r.out, "rate") == doctest::Approx(1.0).epsilon(0.1));
    CHECK(value_after(r.out, "time_span") > 1000.0);
}

TEST_CASE("cli simulate: frequency cap note on zero-wait") {
    CliResult r = run_cli("simulate --policy zero-wait --fmax 0.5 --cycles 1000 --dt 0.005 "
                          "--no-timestamp");
    REQUIRE(r.code == 0);
    CHECK(has_line(r.out,
                   "note zero-wait rate 1/E[Y] exceeds f_max; the cap is not enforced here"));
}

TEST_CASE("cli simulate: auto threshold resolves to the mmse-optimal policy") {
    CliResult r = run_cli("simulate --policy signal-threshold:auto --cycles 10000 --dt 0.002 "
                          "--seed 9 --no-timestamp");
    REQUIRE(r.code == 0);
    CHECK(has_line_prefix(r.out, "policy signal-threshold:1.8981231"));
    CHECK(has_line(r.out, "divergent false"));
    CHECK(std::abs(value_after(r.out, "mse") - 1.6327077175172913) < 0.1);
}

TEST_CASE("cli simulate: uniform sampling above the service rate diverges") {
    CliResult r = run_cli("simulate --policy uniform:0.5 --cycles 4000 --dt 0.005 "
                          "--queue-cap 500 --no-timestamp");
    REQUIRE(r.code == 0);
    CHECK(has_line(r.out, "divergent true"));
    CHECK(value_after(r.out, "max_queue_len") > 500.0);
}

TEST_CASE("cli simulate: csv row with exact deterministic cells") {
    CliResult r = run_cli("simulate --policy age-threshold:2 --delay det:1 --cycles 1500 "
                          "--dt 0.01 --no-timestamp --format csv");
    REQUIRE(r.code == 0);
    auto ls = lines_of(r.out);
    REQUIRE(ls.size() == 3);
    CHECK(ls[0] == "# wsamp simulate 0.1.0");
    CHECK(ls[1] ==
          "policy,delay,seed,n_cycles,dt,mse,mse_ci95,age,age_ci95,rate,rate_ci95,"
          "time_span,divergent,max_queue_len");
    // det:1 with threshold 2: every cycle is exactly 2 long, age integral 4
    CHECK(ls[2].rfind("age-threshold:2,det:1,42,1500,0.01,", 0) == 0);
    CHECK(ls[2].find(",2,0,0.5,0,3000,false,1") != std::string::npos);
}

TEST_CASE("cli simulate: json document with exact deterministic fields") {
    CliResult r = run_cli("simulate --policy zero-wait --delay det:1 --cycles 1200 --dt 0.01 "
                          "--no-timestamp --format json");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j.at("command") == "simulate");
    CHECK(j.at("policy") == "zero-wait");
    CHECK(j.at("delay") == "det:1");
    CHECK(j.at("n_cycles") == 1200);
    CHECK(j.at("dt").get<double>() == 0.01);
    CHECK(j.at("rate").get<double>() == 1.0);
    CHECK(j.at("rate_ci95").get<double>() == 0.0);
    CHECK(j.at("age").get<double>() == 1.5);
    CHECK(j.at("age_ci95").get<double>() == 0.0);
    CHECK(j.at("mse").get<double>() == doctest::Approx(1.5).epsilon(0.15));
    CHECK(j.at("divergent") == false);
    CHECK(j.at("max_queue_len") == 1);
    CHECK(j.at("time_span").get<double>() == doctest::Approx(1200.0));
    CHECK(!j.contains("note"));
    CHECK(!j.contains("generated"));
}

TEST_CASE("cli simulate: identical seeds produce identical bytes") {
    const std::string args =
        "simulate --policy signal-threshold:1 --cycles 1500 --dt 0.005 --seed 7 --no-timestamp";
    CliResult a = run_cli(args);
    CliResult b = run_cli(args);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(a.out == b.out);
    CliResult c = run_cli(
        "simulate --policy signal-threshold:1 --cycles 1500 --dt 0.005 --seed 8 --no-timestamp");
    REQUIRE(c.code == 0);
    CHECK(a.out != c.out);
}

TEST_CASE("cli verify: all identity suites pass at a coarse step") {
    const std::string args = "verify --runs 10000 --cycles 3000 --dt 0.02 --no-timestamp";
    CliResult r = run_cli(args);
    REQUIRE(r.code == 0);
    CHECK(has_line(r.out, "# wsamp verify 0.1.0"));
    CHECK(has_line(r.out, "seed 42"));
    CHECK(r.out.find("== wald identities, fixed duration T=1") != std::string::npos);
    CHECK(r.out.find("== hitting identities (bridge bias), start=0.5 beta=1") !=
          std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);

    auto pos = r.out.find("== summary: ");
    REQUIRE(pos != std::string::npos);
    long long passed = 0, total = 0;
    char slash = 0;
    std::istringstream tail(r.out.substr(pos + 12));
    REQUIRE(static_cast<bool>(tail >> passed >> slash));
    REQUIRE(slash == '/');
    // istream stops at '/': reparse the total from the same stream
    REQUIRE(static_cast<bool>(tail >> total));
    CHECK(passed == total);
    CHECK(total >= 20);

    CliResult again = run_cli(args);
    REQUIRE(again.code == 0);
    CHECK(again.out == r.out);
}

TEST_CASE("cli verify: json and csv reports") {
    CliResult r =
        run_cli("verify --runs 10000 --cycles 3000 --dt 0.02 --no-timestamp --format json");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j.at("command") == "verify");
    CHECK(j.at("failures") == 0);
    REQUIRE(j.at("reports").is_array());
    CHECK(j.at("reports").size() == 9);
    for (const json& report : j.at("reports")) {
        CHECK(report.at("pass") == true);
        REQUIRE(report.at("checks").is_array());
        REQUIRE(!report.at("checks").empty());
        const json& c = report.at("checks").front();
        CHECK(c.contains("check"));
        CHECK(c.contains("observed"));
        CHECK(c.contains("expected"));
        CHECK(c.contains("tolerance"));
        CHECK(c.at("pass") == true);
    }
    CHECK(j.at("reports").front().at("title").get<std::string>().find("wald") !=
          std::string::npos);

    CliResult csv =
        run_cli("verify --runs 10000 --cycles 3000 --dt 0.02 --no-timestamp --format csv");
    REQUIRE(csv.code == 0);
    auto ls = lines_of(csv.out);
    REQUIRE(ls.size() >= 4);
    CHECK(ls[0] == "# wsamp verify 0.1.0");
    CHECK(ls[1] == "suite,check,observed,expected,tolerance,pass");
    for (size_t i = 2; i < ls.size(); ++i) {
        CHECK(ls[i].front() == '"');
        CHECK(ls[i].substr(ls[i].size() - 5) == ",true");
    }
}

TEST_CASE("cli sweep: csv output, file and sidecar agree") {
    const char* csv_path = "/tmp/wsamp_cli_sweep.csv";
    const char* sidecar_path = "/tmp/wsamp_cli_sweep.json";
    std::remove(csv_path);
    std::remove(sidecar_path);

    CliResult r = run_cli("sweep --kind fmax-sweep --grid 0.5,1.2 "
                          "--policies zero-wait,age-threshold --cycles 1500 --dt 0.005 "
                          "--seed 21 --no-timestamp --format csv --out " +
                          std::string(csv_path));
    REQUIRE(r.code == 0);
    auto ls = lines_of(r.out);
    REQUIRE(ls.size() == 5);
    CHECK(ls[0] == "# wsamp sweep 0.1.0");
    CHECK(ls[1] == "# seed 21 kind fmax-sweep model exp:1 f_max inf");
    CHECK(ls[2].rfind("parameter,age_threshold_beta,age_threshold_analytic,", 0) == 0);
    CHECK(ls[2].find("zero_wait_") != std::string::npos);
    CHECK(ls[2].find("mmse_ratio") == std::string::npos);

    CHECK(slurp(csv_path) == strip_header_lines(r.out, 2));

    json sidecar = json::parse(slurp(sidecar_path));
    CHECK(sidecar.at("kind") == "fmax-sweep");
    CHECK(sidecar.at("model") == "exp:1");
    CHECK(sidecar.at("seed") == 21);
    CHECK(sidecar.at("n_cycles") == 1500);
    CHECK(sidecar.at("f_max") == "inf");
    CHECK(sidecar.at("grid") == json::array({0.5, 1.2}));
    REQUIRE(sidecar.at("policies").is_array());
    CHECK(sidecar.at("policies").size() == 2);

    wsamp::SweepTable table = wsamp::parse_sweep_csv(slurp(csv_path));
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].parameter == 0.5);
    CHECK(table.rows[1].parameter == 1.2);
    const wsamp::PolicyCell& zw_slow = table.rows[0].cells[2];
    const wsamp::PolicyCell& zw_fast = table.rows[1].cells[2];
    REQUIRE(zw_slow.present);
    CHECK(zw_slow.flag == wsamp::Feasibility::Infeasible);
    CHECK(std::isnan(zw_slow.mse));
    REQUIRE(zw_fast.present);
    CHECK(zw_fast.flag == wsamp::Feasibility::Feasible);
    CHECK(zw_fast.analytic == 2.0);
    const wsamp::PolicyCell& age_slow = table.rows[0].cells[1];
    REQUIRE(age_slow.present);
    CHECK(age_slow.flag == wsamp::Feasibility::Feasible);
    CHECK(age_slow.beta > 0.0);

    std::remove(csv_path);
    std::remove(sidecar_path);
}

TEST_CASE("cli sweep: json rows") {
    CliResult r = run_cli("sweep --kind fmax-sweep --grid 1.2 --policies zero-wait "
                          "--cycles 1200 --dt 0.005 --no-timestamp --format json");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j.at("command") == "sweep");
    CHECK(j.at("meta").at("kind") == "fmax-sweep");
    REQUIRE(j.at("rows").is_array());
    REQUIRE(j.at("rows").size() == 1);
    const json& row = j.at("rows").front();
    CHECK(row.at("parameter").get<double>() == 1.2);
    REQUIRE(row.contains("zero_wait"));
    CHECK(row.at("zero_wait").at("flag") == "feasible");
    CHECK(row.at("zero_wait").at("analytic").get<double>() == 2.0);
    CHECK(row.at("zero_wait").at("mse").get<double>() == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("cli: config file fills defaults, flags win") {
    const char* cfg_path = "/tmp/wsamp_cli_cfg.json";
    {
        std::ofstream out(cfg_path);
        out << "{\"delay\": \"det:1\", \"seed\": 7}\n";
    }

    CliResult r = run_cli(std::string("solve --no-timestamp --config ") + cfg_path);
    REQUIRE(r.code == 0);
    CHECK(has_line(r.out, "seed 7"));
    CHECK(has_line(r.out, "delay det:1"));
    CHECK(has_line(r.out, "zero-wait-age-optimal true"));

    CliResult over =
        run_cli(std::string("solve --no-timestamp --delay det:2 --config ") + cfg_path);
    REQUIRE(over.code == 0);
    CHECK(has_line(over.out, "delay det:2"));
    CHECK(has_line(over.out, "seed 7"));

    std::remove(cfg_path);
}
