#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "wsamp/moments.hpp"

using namespace wsamp;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Exponential(m) closed forms for the age functionals.
double age_m1_exp(double beta, double m) { return beta + m * std::exp(-beta / m); }
double age_m2_exp(double beta, double m) {
    return beta * beta + std::exp(-beta / m) * (2.0 * m * beta + 2.0 * m * m);
}

}  // namespace

TEST_CASE("normal pdf/cdf/tail basics") {
    CHECK(norm_pdf(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * kPi)).epsilon(1e-15));
    CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(norm_tail(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(norm_cdf(1.0) + norm_tail(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(norm_cdf(-1.0) == doctest::Approx(norm_tail(1.0)).epsilon(1e-13));
    CHECK(norm_cdf(8.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(norm_tail(8.0) < 1e-14);
}

TEST_CASE("conditional max moments match the closed form") {
    // Values from the Phi/phi closed form evaluated independently.
    CHECK(e_max_cond_w2(1.0, 1.0) == doctest::Approx(1.4839414490382867).epsilon(1e-12));
    CHECK(e_max_cond_w4(1.0, 1.0) == doctest::Approx(3.5703868118789748).epsilon(1e-12));
    CHECK(e_max_cond_w2(0.5, 2.0) == doctest::Approx(2.1297432697065597).epsilon(1e-12));
    CHECK(e_max_cond_w4(0.5, 2.0) == doctest::Approx(12.077481407996586).epsilon(1e-12));
    CHECK(e_max_cond_w2(2.0, 0.3) == doctest::Approx(2.005348342638322).epsilon(1e-12));
    CHECK(e_max_cond_w4(2.0, 0.3) == doctest::Approx(4.027298123060157).epsilon(1e-12));

    SUBCASE("degenerate arguments") {
        CHECK(e_max_cond_w2(1.5, 0.0) == 1.5);
        CHECK(e_max_cond_w4(1.5, 0.0) == 2.25);
        CHECK(e_max_cond_w2(0.0, 2.0) == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(e_max_cond_w4(0.0, 2.0) == doctest::Approx(12.0).epsilon(1e-14));
    }
}

TEST_CASE("expect_over_delay integrates against the delay law") {
    auto identity = [](double y) { return y; };
    auto square = [](double y) { return y * y; };

    auto exp2 = DelayModel::exponential(2.0);
    CHECK(expect_over_delay(exp2, identity) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(expect_over_delay(exp2, square) == doctest::Approx(8.0).epsilon(1e-9));

    auto ln = DelayModel::lognormal_normalized(0.75);
    CHECK(expect_over_delay(ln, identity) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(expect_over_delay(ln, square) == doctest::Approx(std::exp(0.5625)).epsilon(1e-9));

    auto det = DelayModel::degenerate(3.0);
    CHECK(expect_over_delay(det, square) == 9.0);

    auto emp = DelayModel::empirical({1.0, 2.0});
    CHECK(expect_over_delay(emp, square) == doctest::Approx(2.5).epsilon(1e-15));

    auto sc = DelayModel::scaled(DelayModel::exponential(1.0), 2.0);
    CHECK(expect_over_delay(sc, square) == doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("signal functionals at beta=1, frozen quadrature values") {
    auto exp1 = DelayModel::exponential(1.0);
    CHECK(e_max_beta_wy2(1.0, exp1) == doctest::Approx(1.5869357175109378).epsilon(1e-9));
    CHECK(e_max_beta2_wy4(1.0, exp1) == doctest::Approx(6.66795267782436).epsilon(1e-9));

    auto ln1 = DelayModel::lognormal_normalized(1.0);
    CHECK(e_max_beta_wy2(1.0, ln1) == doctest::Approx(1.5881410608755213).epsilon(1e-9));
    CHECK(e_max_beta2_wy4(1.0, ln1) == doctest::Approx(8.829535945335328).epsilon(1e-9));
}

TEST_CASE("age functionals against closed forms") {
    auto exp1 = DelayModel::exponential(1.0);
    for (double beta : {0.3, 1.0, 2.5}) {
        CHECK(e_max_beta_y(beta, exp1) == doctest::Approx(age_m1_exp(beta, 1.0)).epsilon(1e-9));
        CHECK(e_max_beta2_y2(beta, exp1) == doctest::Approx(age_m2_exp(beta, 1.0)).epsilon(1e-9));
    }

    auto ln1 = DelayModel::lognormal_normalized(1.0);
    CHECK(e_max_beta_y(1.0, ln1) == doctest::Approx(1.3829249225480262).epsilon(1e-9));
    CHECK(e_max_beta2_y2(1.0, ln1) == doctest::Approx(3.2281434885137155).epsilon(1e-9));

    SUBCASE("degenerate model is a pure max") {
        auto det = DelayModel::degenerate(2.0);
        CHECK(e_max_beta_y(0.5, det) == 2.0);
        CHECK(e_max_beta_y(3.0, det) == 3.0);
        CHECK(e_max_beta2_y2(0.5, det) == 4.0);
        CHECK(e_max_beta2_y2(3.0, det) == 9.0);
    }
}

TEST_CASE("beta=0 reduces every functional to a plain delay moment") {
    auto exp1 = DelayModel::exponential(1.0);
    CHECK(e_max_beta_wy2(0.0, exp1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(e_max_beta2_wy4(0.0, exp1) == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(e_max_beta_y(0.0, exp1) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(e_max_beta2_y2(0.0, exp1) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("negative beta is rejected") {
    auto exp1 = DelayModel::exponential(1.0);
    CHECK_THROWS_AS(e_max_beta_wy2(-0.1, exp1), std::invalid_argument);
    CHECK_THROWS_AS(e_max_beta2_wy4(-0.1, exp1), std::invalid_argument);
    CHECK_THROWS_AS(e_max_beta_y(-0.1, exp1), std::invalid_argument);
    CHECK_THROWS_AS(e_max_beta2_y2(-0.1, exp1), std::invalid_argument);
}

TEST_CASE("scaled model equals the equivalent direct model") {
    auto direct = DelayModel::exponential(1.0);
    auto scaled = DelayModel::scaled(DelayModel::exponential(0.5), 2.0);
    const double beta = 0.7;
    CHECK(e_max_beta_wy2(beta, scaled) == doctest::Approx(e_max_beta_wy2(beta, direct)).epsilon(1e-9));
    CHECK(e_max_beta2_wy4(beta, scaled) == doctest::Approx(e_max_beta2_wy4(beta, direct)).epsilon(1e-9));
    CHECK(e_max_beta_y(beta, scaled) == doctest::Approx(e_max_beta_y(beta, direct)).epsilon(1e-9));
    CHECK(e_max_beta2_y2(beta, scaled) == doctest::Approx(e_max_beta2_y2(beta, direct)).epsilon(1e-9));
}

TEST_CASE("empirical models: Auto lands near the exact atom average") {
    auto emp = DelayModel::empirical({0.3, 1.7});
    const double beta = 1.0;

    // Exact value by averaging the conditional closed form over atoms.
    const double exact_w2 = 0.5 * (e_max_cond_w2(beta, 0.3) + e_max_cond_w2(beta, 1.7));
    const double exact_w4 = 0.5 * (e_max_cond_w4(beta, 0.3) + e_max_cond_w4(beta, 1.7));

    SUBCASE("explicit quadrature is the exact atom sum") {
        CHECK(e_max_beta_wy2(beta, emp, MomentMethod::quadrature()) ==
              doctest::Approx(exact_w2).epsilon(1e-14));
        CHECK(e_max_beta2_wy4(beta, emp, MomentMethod::quadrature()) ==
              doctest::Approx(exact_w4).epsilon(1e-14));
        CHECK(e_max_beta_y(beta, emp, MomentMethod::quadrature()) ==
              doctest::Approx(0.5 * (1.0 + 1.7)).epsilon(1e-15));
        CHECK(e_max_beta2_y2(beta, emp, MomentMethod::quadrature()) ==
              doctest::Approx(0.5 * (1.0 + 1.7 * 1.7)).epsilon(1e-15));
    }

    SUBCASE("Auto uses Monte Carlo, within 4 se of exact") {
        auto mc = mc_e_max_beta_wy2(beta, emp, 10'000'000, kEmpiricalMomentSeed);
        const double auto_val = e_max_beta_wy2(beta, emp);
        CHECK(std::abs(auto_val - exact_w2) < 4.0 * mc.se + 1e-12);
    }
}

TEST_CASE("Monte Carlo estimators agree with quadrature within 4 se") {
    auto exp1 = DelayModel::exponential(1.0);
    const double beta = 1.0;
    const long long n = 2'000'000;

    auto m1 = mc_e_max_beta_wy2(beta, exp1, n, 7);
    CHECK(m1.se > 0.0);
    CHECK(std::abs(m1.value - 1.5869357175109378) < 4.0 * m1.se);

    auto m2 = mc_e_max_beta2_wy4(beta, exp1, n, 8);
    CHECK(std::abs(m2.value - 6.66795267782436) < 4.0 * m2.se);

    auto a1 = mc_e_max_beta_y(beta, exp1, n, 9);
    CHECK(std::abs(a1.value - age_m1_exp(beta, 1.0)) < 4.0 * a1.se);

    auto a2 = mc_e_max_beta2_y2(beta, exp1, n, 10);
    CHECK(std::abs(a2.value - age_m2_exp(beta, 1.0)) < 4.0 * a2.se);
}

TEST_CASE("explicit Monte Carlo method is seed-deterministic") {
    auto exp1 = DelayModel::exponential(1.0);
    auto method = MomentMethod::monte_carlo(100'000, 42);
    const double a = e_max_beta_wy2(1.0, exp1, method);
    const double b = e_max_beta_wy2(1.0, exp1, method);
    CHECK(a == b);
    const double c = e_max_beta_wy2(1.0, exp1, MomentMethod::monte_carlo(100'000, 43));
    CHECK(a != c);
}
