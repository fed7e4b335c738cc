#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "madda/scenario.hpp"

using namespace madda;

TEST_CASE("distance basics") {
    CHECK(distance({0, 0}, {0, 0}) == doctest::Approx(0.0));
    CHECK(distance({0, 0}, {3, 4}) == doctest::Approx(5.0));
    CHECK(distance({1, 2}, {4, 6}) == doctest::Approx(5.0));
    // symmetry and triangle inequality on a few points
    Position a{0.3, -1.2}, b{2.0, 0.4}, c{-0.7, 0.9};
    CHECK(distance(a, b) == doctest::Approx(distance(b, a)));
    CHECK(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12);
}

TEST_CASE("resource vector dominance and dot") {
    ResourceVector big{60, 60, 60}, small{40, 50, 60};
    CHECK(big.dominates(small));
    CHECK_FALSE(small.dominates(big));
    CHECK(small.dominates(small));  // boundary is inclusive
    CHECK(big.dot(small) == doctest::Approx(60 * 40 + 60 * 50 + 60 * 60));
}

TEST_CASE("generator is deterministic and respects ranges") {
    SamplingConfig cfg;
    Scenario a = generate_scenario(50, 50, cfg, 42);
    Scenario b = generate_scenario(50, 50, cfg, 42);
    REQUIRE(a.users.size() == 50);
    REQUIRE(a.providers.size() == 50);
    CHECK(scenario_to_json(a) == scenario_to_json(b));

    for (const auto& u : a.users) {
        for (int k = 0; k < kNumResources; ++k) {
            CHECK(u.required[k] >= cfg.resource_low);
            CHECK(u.required[k] <= cfg.resource_high);
        }
        CHECK(u.max_distance >= cfg.max_distance_low);
        CHECK(u.max_distance <= cfg.max_distance_high);
        CHECK(u.min_reputation >= cfg.min_reputation_low);
        CHECK(u.min_reputation <= cfg.min_reputation_high);
        double wsum = u.resource_weights[0] + u.resource_weights[1] +
                      u.resource_weights[2];
        CHECK(wsum == doctest::Approx(1.0));
    }
    for (const auto& p : a.providers) {
        for (int k = 0; k < kNumResources; ++k) {
            CHECK(p.owned[k] >= cfg.resource_low);
            CHECK(p.owned[k] <= cfg.resource_high);
        }
        CHECK(std::abs(p.position.x) <= cfg.map_side / 2);
        CHECK(std::abs(p.position.y) <= cfg.map_side / 2);
    }
}

TEST_CASE("different seeds give different draws") {
    Scenario a = generate_scenario(10, 10, SamplingConfig{}, 7);
    Scenario b = generate_scenario(10, 10, SamplingConfig{}, 8);
    CHECK(a.users[0].required.computation != b.users[0].required.computation);
}

TEST_CASE("degenerate zero-width ranges collapse to the endpoint") {
    SamplingConfig cfg;
    cfg.resource_low = cfg.resource_high = 55.0;
    cfg.max_distance_low = cfg.max_distance_high = 0.9;
    cfg.min_reputation_low = cfg.min_reputation_high = 0.7;
    Scenario s = generate_scenario(1, 1, cfg, 0);
    CHECK(s.users[0].required.computation == 55.0);
    CHECK(s.users[0].required.storage == 55.0);
    CHECK(s.providers[0].owned.communication == 55.0);
    CHECK(s.users[0].max_distance == 0.9);
    CHECK(s.users[0].min_reputation == 0.7);
}

TEST_CASE("generated scenarios validate clean") {
    Scenario s = generate_scenario(20, 20, SamplingConfig{}, 3);
    CHECK(validate_scenario(s).empty());
}

TEST_CASE("validation flags broken scenarios") {
    Scenario s = generate_scenario(5, 5, SamplingConfig{}, 1);

    Scenario bad_price = s;
    bad_price.market.price_min = bad_price.market.price_max;
    CHECK(validate_scenario(bad_price).size() >= 1);

    Scenario bad_weights = s;
    bad_weights.users[0].resource_weights = {0.3, 0.3, 0.3};
    CHECK(validate_scenario(bad_weights).size() == 1);
}

TEST_CASE("sampling config validation") {
    SamplingConfig cfg;
    CHECK(validate_sampling(cfg).empty());
    cfg.resource_low = 80;
    cfg.resource_high = 40;
    CHECK_FALSE(validate_sampling(cfg).empty());
}

TEST_CASE("serialization round-trips byte-identically") {
    Scenario s = generate_scenario(15, 12, SamplingConfig{}, 99);
    std::string j1 = scenario_to_json(s);
    Scenario back = scenario_from_json(j1);
    CHECK(scenario_to_json(back) == j1);
    CHECK(back.users.size() == s.users.size());
    CHECK(back.providers.size() == s.providers.size());
    CHECK(back.seed == s.seed);
    CHECK(back.users[3].min_reputation == s.users[3].min_reputation);
    CHECK(back.market.calibration.seller_hi == s.market.calibration.seller_hi);
}

TEST_CASE("seed mixing separates nearby inputs") {
    CHECK(mix_seed(1, 1) != mix_seed(1, 2));
    CHECK(mix_seed(1, 1) != mix_seed(2, 1));
    CHECK(mix_seed(5, 7) == mix_seed(5, 7));
}
