#include <catch2/catch_amalgamated.hpp>
#include <cymark/evaluation.hpp>
#include <cymark/synth.hpp>

#include "testutil.hpp"

using namespace cymark;
using testutil::make_seq;

TEST_CASE("a perfect predictor scores zero error") {
    auto truth = make_random_model(24, 3, 61);
    auto test = sample_sequence(truth, 24 * 20, 5);
    PredictFn oracle = [&](int, Timestamp time, int d) {
        return static_cast<double>(test.values[time + d - test.start]);
    };
    auto stats = evaluate_predictor(oracle, {test}, {1, 3, 7}, 24, 1, 24);
    for (const auto& st : stats) {
        CHECK(st.abs_sum == 0.0);
        CHECK(st.sq_sum == 0.0);
        CHECK(st.count > 0);
    }
}

TEST_CASE("last-value stats on a sequence worked by hand") {
    auto seq = make_seq("c", 3, 0, {3, 1, 2, 0});
    PredictFn last = [](int v, Timestamp, int) { return static_cast<double>(v); };
    auto stats = evaluate_predictor(last, {seq}, {1, 2}, 4, 1, 4);

    // d=1: predictions 3,1,2 against 1,2,0
    CHECK(stats[0].count == 3);
    CHECK(stats[0].skipped == 1);
    CHECK(stats[0].abs_sum == 5.0);
    CHECK(stats[0].sq_sum == 4.0 + 1.0 + 4.0);
    // d=2: predictions 3,1 against 2,0
    CHECK(stats[1].count == 2);
    CHECK(stats[1].skipped == 2);
    CHECK(stats[1].abs_sum == 2.0);
    CHECK(stats[1].sq_sum == 2.0);
}

TEST_CASE("the window restricts target positions") {
    auto seq = make_seq("c", 3, 0, {3, 1, 2, 0, 3, 1, 2, 0});
    PredictFn last = [](int v, Timestamp, int) { return static_cast<double>(v); };
    // window [2,3] of p=4 keeps targets at steps 1,2,5,6
    auto stats = evaluate_predictor(last, {seq}, {1}, 4, 2, 3);
    CHECK(stats[0].count + stats[0].skipped == 4);
    CHECK(stats[0].count == 4);

    // lookbacks that hit a missing value are skipped, not guessed
    auto gappy = make_seq("c", 3, 0, {3, kMissingValue, 2, 0});
    auto st = evaluate_predictor(last, {gappy}, {1}, 4, 1, 4);
    CHECK(st[0].count == 1);    // only 0 -> missing -> 2 -> 0 leaves 2->0 usable
    CHECK(st[0].skipped == 2);  // target 0 has no lookback, target 2's is missing

    CHECK_THROWS_AS(evaluate_predictor(last, {seq}, {1}, 4, 0, 4), domain_error);
    CHECK_THROWS_AS(evaluate_predictor(last, {seq}, {1}, 4, 3, 2), domain_error);
    CHECK_THROWS_AS(evaluate_predictor(last, {seq}, {0}, 4, 1, 4), domain_error);
}

TEST_CASE("variant names form the report table") {
    CHECK(kind_name(ModelKind::baum_welch) == "BW");
    CHECK(kind_name(ModelKind::heuristic) == "HEUR");
    CHECK(kind_name(ModelKind::standard) == "STD");
    CHECK(kind_name(ModelKind::average) == "AVG");
    CHECK(kind_name(ModelKind::last) == "LAST");
    CHECK(variant_name({ModelKind::baum_welch, false}) == "BW inhom.");
    CHECK(variant_name({ModelKind::average, true}) == "AVG hom.");
    CHECK(variant_name({ModelKind::last, false}) == "LAST");
    auto vs = default_variants();
    CHECK(vs.size() == 9u);
}

TEST_CASE("experiment runs are deterministic and thread-count invariant") {
    auto truth_a = make_random_model(24, 3, 71);
    auto truth_b = make_random_model(24, 4, 72);
    std::map<std::string, std::vector<ObservationSequence>> train, test;
    train["a"] = sample_sequences(truth_a, 4, 480, 11, "a");
    test["a"] = sample_sequences(truth_a, 2, 480, 12, "a", 10 * kMinutesPerDay);
    train["b"] = sample_sequences(truth_b, 4, 480, 13, "b");
    test["b"] = sample_sequences(truth_b, 2, 480, 14, "b", 10 * kMinutesPerDay);

    ExperimentGrid grid;
    grid.betas = {4.0, 8.0};
    grid.horizons = {2, 5};
    grid.repetitions = 2;
    grid.seed = 7;
    grid.window_start = 1;
    grid.window_end = 24;

    TrainingConfig cfg;
    cfg.max_iterations = 20;

    auto r1 = run_experiment(train, test, 24, grid, cfg, 1);
    auto r2 = run_experiment(train, test, 24, grid, cfg, 1);
    auto r4 = run_experiment(train, test, 24, grid, cfg, 4);

    REQUIRE(r1.rows.size() == 9u * 2u * 2u);
    REQUIRE(r1.summaries.size() == 9u);
    for (size_t k = 0; k < r1.rows.size(); ++k) {
        CHECK(r1.rows[k].norm_mae == r2.rows[k].norm_mae);
        CHECK(r1.rows[k].norm_mae == r4.rows[k].norm_mae);
        CHECK(r1.rows[k].norm_rmse == r4.rows[k].norm_rmse);
        CHECK(r1.rows[k].count == r4.rows[k].count);
    }
    for (size_t k = 0; k < r1.summaries.size(); ++k) {
        CHECK(r1.summaries[k].norm_mae == r4.summaries[k].norm_mae);
        CHECK(r1.summaries[k].model == r4.summaries[k].model);
        CHECK(r1.summaries[k].trainings == 2 * 2 * 2);
    }

    // normalized MAE is a fraction of the cluster size
    for (const auto& row : r1.rows) {
        CHECK(row.norm_mae >= 0.0);
        CHECK(row.norm_mae <= 1.0);
        CHECK(row.norm_rmse >= row.norm_mae - 1e-12);
    }
}

TEST_CASE("the average baseline is horizon independent when nothing is skipped") {
    auto truth = make_random_model(1440, 3, 81);
    std::map<std::string, std::vector<ObservationSequence>> train, test;
    train["c"] = sample_sequences(truth, 5, kMinutesPerDay, 21, "c");
    test["c"] = sample_sequences(truth, 2, kMinutesPerDay, 22, "c", 30 * kMinutesPerDay);

    ExperimentGrid grid;
    grid.betas = {60.0};
    grid.horizons = {15, 240};
    grid.repetitions = 1;
    grid.window_start = 421;
    grid.window_end = 1381;
    grid.variants = {{ModelKind::average, false}, {ModelKind::last, false}};

    auto r = run_experiment(train, test, 1440, grid);
    REQUIRE(r.rows.size() == 4u);
    CHECK(r.rows[0].skipped == 0);
    CHECK(r.rows[1].skipped == 0);
    CHECK(r.rows[0].norm_mae == r.rows[1].norm_mae);    // AVG at d=15 vs d=240
    CHECK(r.rows[0].norm_rmse == r.rows[1].norm_rmse);
    CHECK(r.total_skipped == 0);
}

TEST_CASE("non-convergence is surfaced, not hidden") {
    auto truth = make_random_model(24, 3, 91);
    std::map<std::string, std::vector<ObservationSequence>> train, test;
    train["c"] = sample_sequences(truth, 3, 480, 31, "c");
    test["c"] = sample_sequences(truth, 1, 480, 32, "c", 5 * kMinutesPerDay);

    ExperimentGrid grid;
    grid.betas = {6.0};
    grid.horizons = {2};
    grid.repetitions = 2;
    grid.window_start = 1;
    grid.window_end = 24;
    grid.variants = {{ModelKind::baum_welch, false}};

    TrainingConfig cfg;
    cfg.max_iterations = 1;
    cfg.epsilon_convergence = 1e-12;

    auto r = run_experiment(train, test, 24, grid, cfg);
    REQUIRE(r.summaries.size() == 1u);
    CHECK(r.summaries[0].non_converged == r.summaries[0].trainings);
    CHECK(r.summaries[0].trainings == 2);
}

TEST_CASE("experiment input validation") {
    std::map<std::string, std::vector<ObservationSequence>> train, test;
    ExperimentGrid grid;
    CHECK_THROWS_AS(run_experiment(train, test, 24, grid), domain_error);
    auto truth = make_random_model(24, 2, 3);
    train["c"] = sample_sequences(truth, 1, 480, 1, "c");
    CHECK_THROWS_AS(run_experiment(train, test, 24, grid), domain_error);
    test["d"] = train["c"];
    CHECK_THROWS_AS(run_experiment(train, test, 24, grid), domain_error);
    test.clear();
    test["c"] = train["c"];
    grid.repetitions = 0;
    CHECK_THROWS_AS(run_experiment(train, test, 24, grid), domain_error);
}

TEST_CASE("benchmark timings come back per trainer") {
    auto truth = make_random_model(24, 3, 41);
    auto complete = sample_sequences(truth, 2, 24 * 20, 51);
    std::vector<ObservationSequence> sparse;
    for (const auto& s : complete) sparse.push_back(sparsify(s, {6.0, 2}));

    TrainingConfig cfg;
    cfg.max_iterations = 5;
    auto timings = benchmark_training(sparse, 24, 3, cfg, 3);
    REQUIRE(timings.size() == 2u);
    CHECK(timings[0].trainer == "BW");
    CHECK(timings[1].trainer == "HEUR");
    for (const auto& t : timings) {
        CHECK(t.seconds.size() == 3u);
        CHECK(t.mean() > 0.0);
        CHECK(t.stddev() >= 0.0);
    }
    CHECK_THROWS_AS(benchmark_training(sparse, 24, 3, cfg, 0), domain_error);
    CHECK_THROWS_AS(benchmark_training(sparse, 24, 3, cfg, 1, {ModelKind::average}),
                    domain_error);
}

TEST_CASE("granularity comparison degenerates to equality for one bay") {
    auto truth = make_random_model(24, 2, 55);
    auto train_days = sample_sequences(truth, 6, kMinutesPerDay, 61, "c");
    auto test_days = sample_sequences(truth, 2, kMinutesPerDay, 62, "c", 20 * kMinutesPerDay);

    std::vector<ObservationSequence> sparse_train;
    for (const auto& s : train_days) sparse_train.push_back(sparsify(s, {30.0, 5}));

    std::vector<std::vector<ObservationSequence>> res_train(1), res_test(1);
    for (const auto& s : sparse_train) res_train[0].push_back(derive_stacked_bays(s)[0]);
    for (const auto& s : test_days) res_test[0].push_back(derive_stacked_bays(s)[0]);

    TrainingConfig cfg;
    cfg.max_iterations = 30;
    auto g = compare_granularity(sparse_train, test_days, res_train, res_test, 24, {2, 5}, 1,
                                 24, cfg);
    REQUIRE(g.resource_norm_mae.size() == 1u);
    CHECK(g.cluster_norm_mae == Catch::Approx(g.resource_norm_mae[0]).margin(1e-12));
    CHECK(g.mean_resource_norm_mae == Catch::Approx(g.cluster_norm_mae).margin(1e-12));
}
