#include <doctest.h>

#include <latsum/cramer.hpp>

using namespace latsum;

TEST_CASE("floor plan matches hand examples") {
    auto p2 = plan_floor(2);
    CHECK(p2.exponents == std::map<u64, unsigned>{{2, 1}});
    CHECK(p2.epsilon_tilde() == doctest::Approx(0.25));
    CHECK(p2.wz().str() == "2");

    auto p10 = plan_floor(10);
    CHECK(p10.exponents == std::map<u64, unsigned>{{2, 3}, {3, 2}, {5, 1}, {7, 1}});
    CHECK(p10.wz().str() == "2520");
    double eps = 1.0 / 16 + 1.0 / 27 + 1.0 / 25 + 1.0 / 49;
    CHECK(p10.epsilon_tilde() == doctest::Approx(eps));
    CHECK(p10.epsilon_tilde() == doctest::Approx(0.159945).epsilon(1e-4));
}

TEST_CASE("plus-one plan matches hand examples") {
    CHECK(plan_plus_one(2).wz().str() == "4");
    CHECK(plan_plus_one(3).exponents == std::map<u64, unsigned>{{2, 2}, {3, 2}});
    CHECK(plan_plus_one(3).wz().str() == "36");
    CHECK(plan_plus_one(10).wz().str() == "529200"); // 2520 * 2*3*5*7
}

TEST_CASE("floor plan exactness: p^m <= z < p^{m+1}") {
    for (double z : {2.0, 10.0, 100.0, 997.0, 12345.0, 1000000.0}) {
        auto plan = plan_floor(z);
        for (auto [p, m] : plan.exponents) {
            REQUIRE(m >= 1);
            u128 pm = 1;
            for (unsigned i = 0; i < m; ++i) pm *= p;
            CHECK(double(u64(pm)) <= z);
            CHECK(double(u64(pm * p)) > z);
        }
    }
}

TEST_CASE("plus-one plan always improves epsilon") {
    for (double z : {2.0, 5.0, 23.0, 100.0, 5000.0})
        CHECK(plan_plus_one(z).epsilon_tilde() < plan_floor(z).epsilon_tilde());
}

TEST_CASE("W_z multiplicativity against per-prime powers") {
    auto plan = plan_floor(50);
    BigInt w(1);
    for (auto [p, m] : plan.exponents) w *= BigInt(i64(u64_pow_checked(p, m)));
    CHECK(w == plan.wz());
}

TEST_CASE("epsilon decay table") {
    auto rows = epsilon_decay_check({10, 100, 1000, 10000});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].epsilon == doctest::Approx(0.159945).epsilon(1e-4));
    for (size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].epsilon < rows[i - 1].epsilon);

    auto single = epsilon_decay_check({42});
    CHECK(single.size() == 1);

    CHECK_THROWS(epsilon_decay_check({10, 10}));
}

TEST_CASE("plus-one log W_z <= 3z holds at moderate z") {
    for (double z : {100.0, 1000.0, 10000.0}) CHECK(plan_plus_one(z).log_wz() <= 3 * z);
}

TEST_CASE("custom plans validate input") {
    CHECK_THROWS(plan_custom(10, {{4, 1}}));  // not prime
    CHECK_THROWS(plan_custom(10, {{2, 0}}));  // exponent 0
    CHECK_THROWS(plan_custom(10, {{11, 1}})); // prime beyond z
    auto p = plan_custom(10, {{2, 7}, {3, 1}});
    CHECK(p.exponent(2) == 7);
    CHECK(p.exponent(5) == 0);
}
