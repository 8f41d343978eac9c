#include "krrdp/payoffs.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace krrdp;

namespace {
Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    std::copy(v.begin(), v.end(), out.data());
    return out;
}
}  // namespace

TEST_CASE("max-call examples") {
    CHECK(max_call(vec({110, 90}), 100) == 10.0);
    CHECK(max_call(vec({90, 95}), 100) == 0.0);
    CHECK(max_call(vec({100, 150, 120}), 100) == 50.0);
}

TEST_CASE("geometric basket put examples") {
    CHECK(geo_basket_put(vec({100, 100}), 100) == doctest::Approx(0.0));
    CHECK(geo_basket_put(vec({81, 121}), 100) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(geo_basket_put(vec({100, 130, 250}), 100) == 0.0);
}

TEST_CASE("stage reward") {
    const PayoffSpec call{PayoffKind::MaxCall, 100.0};
    const State x(vec({110, 90}));
    CHECK(stage_reward(x, kHold, 3, call) == 0.0);
    CHECK(stage_reward(State::cemetery(), kExercise, 3, call) == 0.0);
    CHECK(stage_reward(x, kExercise, 3, call) == 10.0);
    CHECK_THROWS_AS(stage_reward(x, 7, 3, call), std::invalid_argument);
}

TEST_CASE("payoff spec parsing and validation") {
    CHECK(parse_payoff_kind("max_call") == PayoffKind::MaxCall);
    CHECK(parse_payoff_kind("geometric_put") == PayoffKind::GeometricBasketPut);
    CHECK(to_string(PayoffKind::MaxCall) == "max_call");
    CHECK_THROWS_AS(parse_payoff_kind("asian"), std::invalid_argument);
    CHECK_THROWS_AS((PayoffSpec{PayoffKind::MaxCall, 0.0}.validate()), std::invalid_argument);

    const PayoffSpec put{PayoffKind::GeometricBasketPut, 100.0};
    const Vector x = vec({81, 121});
    CHECK(put(x) == put(x.data(), 2));
}

TEST_CASE("payoff properties") {
    Stream rng(3, {});
    for (int trial = 0; trial < 2000; ++trial) {
        const int d = 1 + static_cast<int>(rng.below(6));
        Vector x(d);
        for (int i = 0; i < d; ++i) x(i) = 200.0 * rng.uniform();
        const double k = 150.0 * rng.uniform() + 1.0;
        const double c = 5.0 * rng.uniform() + 0.01;

        const double gp = geo_basket_put(x, k);
        CHECK(gp >= 0.0);
        CHECK(gp <= k);
        const double mc = max_call(x, k);
        CHECK(mc >= 0.0);
        CHECK(std::isfinite(mc));
        CHECK(max_call(c * x, c * k) == doctest::Approx(c * mc).epsilon(1e-12));

        Vector y = x;
        std::reverse(y.data(), y.data() + d);
        CHECK(max_call(y, k) == mc);
        CHECK(geo_basket_put(y, k) == doctest::Approx(gp).epsilon(1e-12));
    }
}
