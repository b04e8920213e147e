#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "wsamp/delay_model.hpp"
#include "wsamp/rng.hpp"

using namespace wsamp;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = "/tmp/wsamp_test_" + name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("factories validate their parameters") {
    CHECK_THROWS_AS(DelayModel::degenerate(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::exponential(0.0), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::exponential(-2.0), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::lognormal_normalized(0.0), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::scaled(DelayModel::exponential(1.0), -0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::empirical({}), std::invalid_argument);
    CHECK_THROWS_AS(DelayModel::empirical({1.0, -0.1}), std::invalid_argument);
    CHECK_NOTHROW(DelayModel::degenerate(0.0));
    CHECK_NOTHROW(DelayModel::scaled(DelayModel::exponential(1.0), 0.0));
}

TEST_CASE("moments are the textbook values") {
    CHECK(DelayModel::degenerate(3.0).mean() == 3.0);
    CHECK(DelayModel::degenerate(3.0).second_moment() == 9.0);

    CHECK(DelayModel::exponential(2.0).mean() == 2.0);
    CHECK(DelayModel::exponential(2.0).second_moment() == 8.0);

    auto ln = DelayModel::lognormal_normalized(0.7);
    CHECK(ln.mean() == 1.0);
    CHECK(ln.second_moment() == doctest::Approx(std::exp(0.49)).epsilon(1e-12));

    auto sc = DelayModel::scaled(DelayModel::exponential(1.0), 3.0);
    CHECK(sc.mean() == 3.0);
    CHECK(sc.second_moment() == 18.0);

    auto emp = DelayModel::empirical({1.0, 2.0, 3.0});
    CHECK(emp.mean() == 2.0);
    CHECK(emp.second_moment() == doctest::Approx(14.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("essential infimum per kind") {
    CHECK(DelayModel::degenerate(2.5).ess_inf() == 2.5);
    CHECK(DelayModel::exponential(1.0).ess_inf() == 0.0);
    CHECK(DelayModel::lognormal_normalized(1.0).ess_inf() == 0.0);
    CHECK(DelayModel::empirical({0.4, 1.0, 2.0}).ess_inf() == 0.4);
    CHECK(DelayModel::scaled(DelayModel::degenerate(2.0), 3.0).ess_inf() == 6.0);
}

TEST_CASE("almost_surely_zero recognizes degenerate-at-zero compositions") {
    CHECK(DelayModel::degenerate(0.0).almost_surely_zero());
    CHECK_FALSE(DelayModel::degenerate(1.0).almost_surely_zero());
    CHECK_FALSE(DelayModel::exponential(1.0).almost_surely_zero());
    CHECK(DelayModel::scaled(DelayModel::exponential(1.0), 0.0).almost_surely_zero());
    CHECK(DelayModel::empirical({0.0, 0.0}).almost_surely_zero());
    CHECK_FALSE(DelayModel::empirical({0.0, 1.0}).almost_surely_zero());
}

TEST_CASE("sampling matches the declared distribution") {
    Rng rng(31337);
    const int n = 200000;

    SUBCASE("exponential mean") {
        auto m = DelayModel::exponential(0.5);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += m.sample(rng);
        CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
    }
    SUBCASE("lognormal is normalized to unit mean") {
        auto m = DelayModel::lognormal_normalized(1.0);
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += m.sample(rng);
        CHECK(sum / n == doctest::Approx(1.0).epsilon(0.03));
    }
    SUBCASE("empirical draws stay in the sample set") {
        auto m = DelayModel::empirical({0.25, 0.5, 4.0});
        for (int i = 0; i < 1000; ++i) {
            double y = m.sample(rng);
            CHECK((y == 0.25 || y == 0.5 || y == 4.0));
        }
    }
    SUBCASE("scaled multiplies the inner draw") {
        auto m = DelayModel::scaled(DelayModel::degenerate(2.0), 1.5);
        CHECK(m.sample(rng) == 3.0);
    }
}

TEST_CASE("describe round-trips through the parser") {
    for (const char* text : {"det:2.5", "exp:0.75", "lognorm:1.25", "scaled:2:exp:1"}) {
        DelayModel m = parse_delay_model(text);
        DelayModel again = parse_delay_model(m.describe());
        CHECK(again.mean() == doctest::Approx(m.mean()).epsilon(1e-12));
        CHECK(again.second_moment() == doctest::Approx(m.second_moment()).epsilon(1e-12));
        CHECK(again.describe() == m.describe());
    }
}

TEST_CASE("parser rejects malformed specs") {
    CHECK_THROWS_AS(parse_delay_model("gauss:1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_delay_model("exp:"), std::invalid_argument);
    CHECK_THROWS_AS(parse_delay_model("exp:abc"), std::invalid_argument);
    CHECK_THROWS_AS(parse_delay_model("det:-1"), std::invalid_argument);
    CHECK_THROWS_AS(parse_delay_model("scaled:2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_delay_model(""), std::invalid_argument);
}

TEST_CASE("empirical files load with unix and windows line endings") {
    std::string path = write_temp("ok.txt", "0.5\n1.25\r\n2.0\n");
    DelayModel m = load_empirical(path);
    CHECK(m.mean() == doctest::Approx((0.5 + 1.25 + 2.0) / 3.0).epsilon(1e-15));
    CHECK(m.describe() == "empirical(n=3)");
    std::remove(path.c_str());
}

TEST_CASE("empirical file errors are specific") {
    CHECK_THROWS_AS(load_empirical("/nonexistent/delays.txt"), std::runtime_error);

    std::string bad = write_temp("bad.txt", "0.5\nnot-a-number\n");
    CHECK_THROWS_WITH_AS(load_empirical(bad), doctest::Contains("line 2"), std::invalid_argument);
    std::remove(bad.c_str());

    std::string neg = write_temp("neg.txt", "0.5\n1.0\n-2\n");
    CHECK_THROWS_WITH_AS(load_empirical(neg), doctest::Contains("line 3"), std::invalid_argument);
    std::remove(neg.c_str());

    std::string empty = write_temp("empty.txt", "\n\n");
    CHECK_THROWS_AS(load_empirical(empty), std::invalid_argument);
    std::remove(empty.c_str());
}

TEST_CASE("file: specs route through the loader") {
    std::string path = write_temp("routed.txt", "1.0\n3.0\n");
    DelayModel m = parse_delay_model("file:" + path);
    CHECK(m.mean() == 2.0);
    std::remove(path.c_str());
}
