#include <catch2/catch_amalgamated.hpp>
#include <cymark/prediction.hpp>
#include <cymark/synth.hpp>

#include "testutil.hpp"

using namespace cymark;
using testutil::make_seq;

TEST_CASE("expected availability and mode") {
    CHECK(expected_available({0.25, 0.5, 0.25}) == 1.0);
    CHECK(expected_available({1.0, 0.0, 0.0}) == 0.0);
    CHECK(expected_available({0.0, 0.0, 1.0}) == 2.0);

    CHECK(most_likely_state({0.2, 0.5, 0.3}) == 1);
    CHECK(most_likely_state({0.4, 0.4, 0.2}) == 0);  // tie breaks low
    CHECK(most_likely_state({0.3, 0.35, 0.35}) == 1);
    CHECK_THROWS_AS(most_likely_state({}), domain_error);
}

TEST_CASE("propagate walks the cycle, by hand") {
    // p = 2, alternating deterministic swap at position 1, identity at 2
    CyclicMarkovModel m(2, 2);
    m.transitions = {0.0, 1.0, 1.0, 0.0,   // x=1: swap
                     1.0, 0.0, 0.0, 1.0};  // x=2: identity
    m.initial = {0.5, 0.5, 0.5, 0.5};

    auto s = propagate(m, {1.0, 0.0}, 1, 1);
    CHECK(s == StateDistribution{0.0, 1.0});
    s = propagate(m, {1.0, 0.0}, 1, 2);  // swap then identity
    CHECK(s == StateDistribution{0.0, 1.0});
    s = propagate(m, {1.0, 0.0}, 1, 3);  // swap, identity, swap
    CHECK(s == StateDistribution{1.0, 0.0});
    s = propagate(m, {1.0, 0.0}, 2, 1);  // start mid-cycle
    CHECK(s == StateDistribution{1.0, 0.0});

    CHECK(propagate(m, {0.3, 0.7}, 1, 0) == StateDistribution{0.3, 0.7});
    CHECK_THROWS_AS(propagate(m, {1.0, 0.0}, 0, 1), domain_error);
    CHECK_THROWS_AS(propagate(m, {1.0, 0.0}, 3, 1), domain_error);
    CHECK_THROWS_AS(propagate(m, {1.0}, 1, 1), domain_error);
    CHECK_THROWS_AS(propagate(m, {1.0, 0.0}, 1, -1), domain_error);
}

TEST_CASE("propagate preserves normalization over long horizons") {
    auto m = make_random_model(24, 4, 3);
    auto s = propagate(m, one_hot(4, 2), 5, 1000);
    double sum = 0.0;
    for (double v : s) {
        CHECK(v >= 0.0);
        sum += v;
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("predict depends on the cycle position, not the date") {
    auto m = make_random_model(1440, 3, 8);
    PredictionRequest monday{1, 16132 * static_cast<Timestamp>(kMinutesPerDay) + 480, 45};
    PredictionRequest thursday{1, 16135 * static_cast<Timestamp>(kMinutesPerDay) + 480, 45};
    CHECK(predict(m, monday) == predict(m, thursday));

    PredictionRequest bad{5, 0, 45};
    CHECK_THROWS_AS(predict(m, bad), domain_error);
    PredictionRequest zero{1, 0, 0};
    CHECK_THROWS_AS(predict(m, zero), domain_error);
}

TEST_CASE("composite cache predicts exactly like the propagate loop") {
    auto m = make_random_model(48, 4, 12);
    std::vector<int> horizons{1, 2, 7, 15, 48, 100};
    CompositeCache cache(m, horizons);
    for (int d : horizons)
        for (int x : {1, 2, 24, 48})
            for (int v = 0; v < 4; ++v) {
                double loop = expected_available(propagate(m, one_hot(4, v), x, d));
                CHECK(cache.predict(v, x, d) == Catch::Approx(loop).margin(1e-12));
            }
    CHECK_THROWS_AS(cache.predict(0, 1, 3), domain_error);  // horizon not prepared
    CHECK_THROWS_AS(CompositeCache(m, {0}), domain_error);
}

TEST_CASE("historic average: per-position means and interpolation") {
    // p = 4, observations on positions 1 and 3 only
    auto a = make_seq("c", 8, 0, {4, kMissingValue, 6, kMissingValue});
    auto b = make_seq("c", 8, 4, {4, kMissingValue, 6, kMissingValue});
    auto avg = train_historic_average({a, b}, 4);
    CHECK(avg.mean_at(1) == 4.0);
    CHECK(avg.mean_at(3) == 6.0);
    CHECK(avg.mean_at(2) == 5.0);  // midpoint
    CHECK(avg.mean_at(4) == 5.0);  // cyclic midpoint between 3 and 1
    CHECK_THROWS_AS(avg.mean_at(0), domain_error);
    CHECK_THROWS_AS(avg.mean_at(5), domain_error);

    SECTION("uneven spacing interpolates proportionally") {
        // observed at positions 1 and 4 of p = 5: position 2 sits 1/3 of the way
        auto c = make_seq("c", 9, 0, {3, kMissingValue, kMissingValue, 9, kMissingValue});
        auto m2 = train_historic_average({c}, 5);
        CHECK(m2.mean_at(2) == Catch::Approx(5.0));
        CHECK(m2.mean_at(3) == Catch::Approx(7.0));
        // cyclic stretch from 4 back to 1 has length 2: position 5 is halfway
        CHECK(m2.mean_at(5) == Catch::Approx(6.0));
    }

    SECTION("homogeneous variant uses the global mean everywhere") {
        auto h = train_historic_average({a, b}, 4, true);
        for (int x = 1; x <= 4; ++x) CHECK(h.mean_at(x) == 5.0);
    }

    SECTION("single observed position fills the whole cycle") {
        auto c = make_seq("c", 8, 0, {7, kMissingValue});
        auto m2 = train_historic_average({c}, 2);
        CHECK(m2.mean_at(1) == 7.0);
        CHECK(m2.mean_at(2) == 7.0);
    }

    CHECK_THROWS_AS(train_historic_average({}, 4), domain_error);
    auto empty = make_seq("c", 8, 0, {kMissingValue, kMissingValue});
    CHECK_THROWS_AS(train_historic_average({empty}, 2), domain_error);
}

TEST_CASE("baselines") {
    PredictionRequest req{3, 480, 60};
    CHECK(baseline_last(req) == 3.0);

    HistoricAverageModel avg;
    avg.cycle_length = 1440;
    avg.means.assign(1440, 2.0);
    avg.means[480] = 9.0;  // position 481, i.e. 08:00
    CHECK(baseline_avg(avg, 16132 * static_cast<Timestamp>(kMinutesPerDay) + 480) == 9.0);
    CHECK(baseline_avg(avg, 16132 * static_cast<Timestamp>(kMinutesPerDay) + 481) == 2.0);
}
