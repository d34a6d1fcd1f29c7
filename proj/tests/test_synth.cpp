#include <catch2/catch_amalgamated.hpp>
#include <cymark/estimation.hpp>
#include <cymark/synth.hpp>

#include "testutil.hpp"

using namespace cymark;
using testutil::make_seq;

TEST_CASE("random models respect their floor and vary over the cycle") {
    SynthOptions opt;
    opt.min_entry = 0.05;
    auto m = make_random_model(24, 4, 31, opt);
    CHECK(validate_model(m, opt.min_entry).empty());

    // the sinusoidal blend has to actually move the matrices
    double spread = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            spread = std::max(spread, std::fabs(m.transition(1, i, j) - m.transition(13, i, j)));
    CHECK(spread > 0.01);

    CHECK(make_random_model(24, 4, 31, opt).transitions == m.transitions);  // deterministic
    CHECK(make_random_model(24, 4, 32, opt).transitions != m.transitions);
}

TEST_CASE("sampled sequences look like the model that produced them") {
    auto m = make_random_model(6, 3, 17);
    auto seq = sample_sequence(m, 6 * 2000, 23);
    CHECK(seq.length() == 12000);
    CHECK(seq.cluster_size == 2);
    CHECK(seq.complete());
    for (int v : seq.values) {
        CHECK(v >= 0);
        CHECK(v <= 2);
    }

    // empirical conditional frequencies approach the true transitions
    auto est = estimate_complete({seq}, 6, 3);
    double worst = 0.0;
    for (int x = 1; x <= 6; ++x)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                worst = std::max(worst,
                                 std::fabs(est.transition(x, i, j) - m.transition(x, i, j)));
    CHECK(worst < 0.1);

    CHECK(sample_sequence(m, 100, 23).values ==
          std::vector<int>(seq.values.begin(), seq.values.begin() + 100));
}

TEST_CASE("sequence batches anchor one day apart") {
    auto m = make_random_model(24, 3, 40);
    auto seqs = sample_sequences(m, 5, 24 * 10, 77, "lot", 1440);
    REQUIRE(seqs.size() == 5u);
    for (size_t s = 0; s < seqs.size(); ++s) {
        CHECK(seqs[s].cluster_id == "lot");
        CHECK(seqs[s].start == 1440 + static_cast<Timestamp>(s) * kMinutesPerDay);
        CHECK(seqs[s].complete());
    }
    CHECK(seqs[0].values != seqs[1].values);
}

TEST_CASE("stacked bays sum back to the cluster count") {
    auto cluster = make_seq("c", 3, 0, {0, 1, 3, 2, kMissingValue, 1});
    auto bays = derive_stacked_bays(cluster);
    REQUIRE(bays.size() == 3u);
    for (size_t b = 0; b < bays.size(); ++b) {
        CHECK(bays[b].cluster_size == 1);
        CHECK(bays[b].cluster_id == "c/bay" + std::to_string(b));
        CHECK(bays[b].start == cluster.start);
        CHECK(bays[b].length() == cluster.length());
    }
    for (int k = 0; k < cluster.length(); ++k) {
        if (cluster.values[k] < 0) {
            for (const auto& b : bays) CHECK(b.values[k] == kMissingValue);
            continue;
        }
        int sum = 0;
        for (const auto& b : bays) {
            CHECK((b.values[k] == 0 || b.values[k] == 1));
            sum += b.values[k];
        }
        CHECK(sum == cluster.values[k]);
    }
    // stacking order: bay b is free iff at least b+1 resources are free
    CHECK(bays[0].values[1] == 1);
    CHECK(bays[1].values[1] == 0);
    CHECK(bays[2].values[3] == 0);
    CHECK(bays[1].values[3] == 1);
}
