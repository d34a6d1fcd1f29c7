#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>
#include <cymark/forward_backward.hpp>
#include <cymark/io.hpp>
#include <cymark/sampler.hpp>
#include <cymark/synth.hpp>

#include "testutil.hpp"

using namespace cymark;
using testutil::make_seq;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = (std::filesystem::temp_directory_path() /
                ("cymark_test_" + std::to_string(::getpid()) + "_" + name))
                   .string();
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("model serialization round trips bit-exactly") {
    auto m = make_random_model(24, 4, 99);
    m.cluster_id = "lot-7";

    SECTION("through json text") {
        auto text = model_to_json(m).dump();
        auto back = model_from_json(nlohmann::json::parse(text));
        CHECK(back.transitions == m.transitions);
        CHECK(back.initial == m.initial);
        CHECK(back.num_states == 4);
        CHECK(back.cycle_length == 24);
        CHECK(back.cluster_id == "lot-7");
        CHECK_FALSE(back.observation.has_value());
    }
    SECTION("through a file, with metadata and an observation override") {
        m.observation = std::vector<double>(16, 0.25);
        TempFile f("model.json");
        save_model(m, f.path, {{"note", "test"}});
        auto back = load_model(f.path);
        CHECK(back.transitions == m.transitions);
        CHECK(back.initial == m.initial);
        REQUIRE(back.observation.has_value());
        CHECK(*back.observation == *m.observation);
    }
    SECTION("awkward doubles survive") {
        CyclicMarkovModel t(2, 1);
        t.transitions = {0.1, 0.9, 1.0 / 3.0, 2.0 / 3.0};
        t.initial = {1e-300, 1.0 - 1e-300};
        auto back = model_from_json(nlohmann::json::parse(model_to_json(t).dump()));
        CHECK(back.transitions == t.transitions);
        CHECK(back.initial == t.initial);
    }
}

TEST_CASE("model files are validated on load") {
    auto m = make_random_model(3, 2, 1);
    auto j = model_to_json(m);

    SECTION("format tag") {
        j["format"] = "something-else";
        CHECK_THROWS_AS(model_from_json(j), schema_error);
    }
    SECTION("version") {
        j["version"] = 999;
        CHECK_THROWS_AS(model_from_json(j), schema_error);
    }
    SECTION("missing key") {
        j.erase("initial");
        CHECK_THROWS_AS(model_from_json(j), schema_error);
    }
    SECTION("matrix count") {
        j["transitions"].erase(0);
        CHECK_THROWS_AS(model_from_json(j), schema_error);
    }
    SECTION("row length") {
        j["transitions"][0][0].erase(0);
        CHECK_THROWS_AS(model_from_json(j), schema_error);
    }
    SECTION("non-numeric entry") {
        j["transitions"][0][0][0] = "x";
        CHECK_THROWS_AS(model_from_json(j), schema_error);
    }
    SECTION("bad dimensions") {
        j["num_states"] = 0;
        CHECK_THROWS_AS(model_from_json(j), schema_error);
    }
    SECTION("unknown observation tag") {
        j["observation"] = "diagonal";
        CHECK_THROWS_AS(model_from_json(j), schema_error);
    }
    SECTION("missing file is io_error, junk file is schema_error") {
        CHECK_THROWS_AS(load_model("/nonexistent/path/model.json"), io_error);
        TempFile f("junk.json");
        {
            std::ofstream out(f.path);
            out << "not json at all {";
        }
        CHECK_THROWS_AS(load_model(f.path), schema_error);
    }
}

TEST_CASE("observation csv round trips day-shaped sequences") {
    auto truth = make_random_model(1440, 3, 4);
    std::vector<ObservationSequence> days;
    for (int d = 0; d < 3; ++d) {
        auto s = sample_sequence(truth, kMinutesPerDay, 100 + d,
                                 static_cast<Timestamp>(16132 + d) * kMinutesPerDay, "lot-a");
        days.push_back(sparsify(s, {45.0, 8}));
    }
    // a second cluster with different size, complete day
    auto other = sample_sequence(make_random_model(1440, 5, 6), kMinutesPerDay, 9,
                                 static_cast<Timestamp>(16132) * kMinutesPerDay, "lot-b");
    days.push_back(other);

    std::stringstream buf;
    write_observation_csv(buf, days);
    auto back = read_observation_csv(buf, {{"lot-a", 2}, {"lot-b", 4}});

    REQUIRE(back.size() == days.size());
    // reader returns (cluster, day)-sorted sequences: lot-a days then lot-b
    for (size_t k = 0; k < 3; ++k) {
        CHECK(back[k].cluster_id == "lot-a");
        CHECK(back[k].start == days[k].start);
        CHECK(back[k].values == days[k].values);
        CHECK(back[k].cluster_size == 2);
    }
    CHECK(back[3].cluster_id == "lot-b");
    CHECK(back[3].values == other.values);
}

TEST_CASE("observation csv rejects bad rows") {
    auto read = [](const std::string& text) {
        std::stringstream ss(text);
        return read_observation_csv(ss, {{"a", 2}});
    };
    CHECK_THROWS_AS(read("cluster_id,timestamp,count\nb,2014-03-03T08:00,1\n"), schema_error);
    CHECK_THROWS_AS(read("a,2014-03-03T08:61,1\n"), schema_error);
    CHECK_THROWS_AS(read("a,2014-03-03T08:00,3\n"), schema_error);
    CHECK_THROWS_AS(read("a,2014-03-03T08:00,-1\n"), schema_error);
    CHECK_THROWS_AS(read("a,2014-03-03T08:00,1x\n"), schema_error);
    CHECK_THROWS_AS(read("a,2014-03-03T08:00\n"), schema_error);
    CHECK_THROWS_AS(read("a,2014-03-03T08:00,1,extra\n"), schema_error);

    // headerless input and seconds flooring both work
    auto seqs = read("a,2014-03-03T08:00:30,1\n");
    REQUIRE(seqs.size() == 1u);
    CHECK(seqs[0].values[480] == 1);
    CHECK(seqs[0].observed_count() == 1);
    CHECK(seqs[0].start == 16132 * static_cast<Timestamp>(kMinutesPerDay));
    CHECK(seqs[0].length() == kMinutesPerDay);
}

TEST_CASE("cluster size table round trips") {
    TempFile f("sizes.csv");
    std::map<std::string, int> sizes{{"lot-a", 12}, {"lot-b", 3}};
    write_cluster_sizes(f.path, sizes);
    CHECK(read_cluster_sizes(f.path) == sizes);
    CHECK_THROWS_AS(read_cluster_sizes("/nonexistent/sizes.csv"), io_error);

    TempFile bad("sizes_bad.csv");
    {
        std::ofstream out(bad.path);
        out << "cluster_id,size\nlot-a,abc\n";
    }
    CHECK_THROWS_AS(read_cluster_sizes(bad.path), schema_error);
}

TEST_CASE("csv field splitting keeps empty fields and strips CR") {
    auto f = detail::split_csv_line("a,,c\r");
    REQUIRE(f.size() == 3u);
    CHECK(f[0] == "a");
    CHECK(f[1] == "");
    CHECK(f[2] == "c");
    CHECK(detail::split_csv_line("").size() == 1u);
}

TEST_CASE("a trained model survives the full save/load/predict loop") {
    auto truth = make_random_model(24, 3, 12);
    auto seqs = sample_sequences(truth, 3, 24 * 30, 21);
    auto trained = train_baum_welch(seqs, 24, 3);

    TempFile f("trained.json");
    save_model(trained.model, f.path);
    auto back = load_model(f.path);
    CHECK(back.transitions == trained.model.transitions);

    double direct = forward_backward(trained.model, seqs[0]).log_likelihood;
    double loaded = forward_backward(back, seqs[0]).log_likelihood;
    CHECK(direct == loaded);
}
