#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cymark/estimation.hpp"
#include "cymark/forward_backward.hpp"
#include "cymark/gap_paths.hpp"
#include "cymark/prediction.hpp"
#include "cymark/sampler.hpp"
#include "cymark/sequence.hpp"

namespace cymark {

enum class ModelKind { baum_welch, heuristic, standard, average, last };

struct ModelVariant {
    ModelKind kind = ModelKind::baum_welch;
    bool homogeneous = false;
};

inline std::string kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::baum_welch: return "BW";
        case ModelKind::heuristic: return "HEUR";
        case ModelKind::standard: return "STD";
        case ModelKind::average: return "AVG";
        case ModelKind::last: return "LAST";
    }
    return "?";
}

inline std::string variant_name(const ModelVariant& v) {
    if (v.kind == ModelKind::last) return kind_name(v.kind);
    return kind_name(v.kind) + (v.homogeneous ? " hom." : " inhom.");
}

inline std::vector<ModelVariant> default_variants() {
    std::vector<ModelVariant> out;
    for (ModelKind k : {ModelKind::baum_welch, ModelKind::heuristic, ModelKind::standard,
                        ModelKind::average})
        for (bool hom : {false, true}) out.push_back({k, hom});
    out.push_back({ModelKind::last, false});
    return out;
}

// The experiment protocol: sparsity levels, prediction horizons, number of
// sparsification repetitions per level, and the daily evaluation window given
// as an inclusive cycle-position interval. Defaults reproduce the reference
// protocol at p = 1440: beta in {30, 60, 120} minutes, d in {15..240}, four
// repetitions, targets between 7am and 11pm.
struct ExperimentGrid {
    std::vector<double> betas{30.0, 60.0, 120.0};
    std::vector<int> horizons{15, 30, 60, 120, 240};
    int repetitions = 4;
    std::uint64_t seed = 0;
    int window_start = 421;
    int window_end = 1381;
    std::vector<ModelVariant> variants = default_variants();
};

// Point predictor: expected availability d minutes after observing
// last_value at last_time. What varies between model kinds is captured here.
using PredictFn = std::function<double(int last_value, Timestamp last_time, int d)>;

struct HorizonStats {
    double abs_sum = 0.0;  // raw-count absolute errors
    double sq_sum = 0.0;
    long count = 0;
    long skipped = 0;  // targets whose lookback fell outside the sequence

    void merge(const HorizonStats& o) {
        abs_sum += o.abs_sum;
        sq_sum += o.sq_sum;
        count += o.count;
        skipped += o.skipped;
    }
};

// Sweeps every observed minute of every test sequence whose cycle position
// lies in the window, feeding the predictor the true value d minutes earlier
// from the same sequence. Targets whose lookback leaves the sequence (or hits
// an unobserved minute) are counted as skipped, never guessed.
inline std::vector<HorizonStats> evaluate_predictor(const PredictFn& fn,
                                                    const std::vector<ObservationSequence>& test,
                                                    const std::vector<int>& horizons, int p,
                                                    int window_start, int window_end) {
    if (window_start < 1 || window_end > p || window_start > window_end)
        throw domain_error("evaluate_predictor: bad window");
    for (int d : horizons)
        if (d < 1) throw domain_error("evaluate_predictor: horizons must be >= 1");

    std::vector<HorizonStats> out(horizons.size());
    for (const auto& seq : test) {
        seq.validate();
        for (int t = 0; t < seq.length(); ++t) {
            if (seq.values[t] < 0) continue;
            int pos = seq.position_of(t, p);
            if (pos < window_start || pos > window_end) continue;
            for (size_t h = 0; h < horizons.size(); ++h) {
                int d = horizons[h];
                int back = t - d;
                if (back < 0 || seq.values[back] < 0) {
                    out[h].skipped += 1;
                    continue;
                }
                double pred = fn(seq.values[back], seq.time_of(back), d);
                double err = pred - seq.values[t];
                out[h].abs_sum += std::fabs(err);
                out[h].sq_sum += err * err;
                out[h].count += 1;
            }
        }
    }
    return out;
}

namespace detail {

struct TrainedPredictor {
    PredictFn fn;
    double train_seconds = 0.0;
    bool converged = true;
};

inline TrainedPredictor train_variant(const ModelVariant& v,
                                      const std::vector<ObservationSequence>& sparse, int p,
                                      int num_states, const TrainingConfig& base,
                                      const std::vector<int>& horizons) {
    using clock = std::chrono::steady_clock;
    TrainedPredictor out;
    TrainingConfig cfg = base;
    cfg.homogeneous = v.homogeneous;
    auto t0 = clock::now();
    switch (v.kind) {
        case ModelKind::baum_welch: {
            auto res = train_baum_welch(sparse, p, num_states, cfg);
            out.converged = res.converged;
            auto cache = std::make_shared<CompositeCache>(res.model, horizons);
            out.fn = [cache, p](int last, Timestamp time, int d) {
                return cache->predict(last, cycle_position_of(time, p), d);
            };
            break;
        }
        case ModelKind::heuristic: {
            auto model = train_heuristic(sparse, p, num_states, cfg);
            auto cache = std::make_shared<CompositeCache>(model, horizons);
            out.fn = [cache, p](int last, Timestamp time, int d) {
                return cache->predict(last, cycle_position_of(time, p), d);
            };
            break;
        }
        case ModelKind::standard: {
            auto model = estimate_observed_pairs(sparse, p, num_states, cfg);
            auto cache = std::make_shared<CompositeCache>(model, horizons);
            out.fn = [cache, p](int last, Timestamp time, int d) {
                return cache->predict(last, cycle_position_of(time, p), d);
            };
            break;
        }
        case ModelKind::average: {
            auto avg = std::make_shared<HistoricAverageModel>(
                train_historic_average(sparse, p, v.homogeneous));
            out.fn = [avg](int, Timestamp time, int d) {
                return baseline_avg(*avg, time + d);
            };
            break;
        }
        case ModelKind::last: {
            out.fn = [](int last, Timestamp, int) { return static_cast<double>(last); };
            break;
        }
    }
    out.train_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    return out;
}

// Runs fn(0..n-1) on up to `jobs` worker threads. Exceptions propagate.
inline void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn) {
    if (jobs < 1) jobs = 1;
    size_t workers = std::min<size_t>(jobs, n);
    if (workers <= 1) {
        for (size_t k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error = nullptr;
    std::mutex err_mtx;
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (!failed.load(std::memory_order_relaxed)) {
                size_t k = next.fetch_add(1);
                if (k >= n) break;
                try {
                    fn(k);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mtx);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

struct EvaluationRow {
    std::string model;
    double beta = 0.0;
    int horizon = 0;
    double norm_mae = 0.0;          // count-weighted across clusters and repetitions
    double norm_mae_mean_of_means = 0.0;
    double norm_rmse = 0.0;
    long count = 0;
    long skipped = 0;
};

struct VariantSummary {
    std::string model;
    ModelKind kind = ModelKind::baum_welch;
    bool homogeneous = false;
    double norm_mae = 0.0;
    double norm_rmse = 0.0;
    long count = 0;
    double train_seconds_mean = 0.0;
    long trainings = 0;
    long non_converged = 0;
};

struct EvaluationReport {
    std::vector<EvaluationRow> rows;          // variant x beta x horizon
    std::vector<VariantSummary> summaries;    // variant, aggregated over the grid
    long total_skipped = 0;
};

// Full experiment: for every (beta, repetition) the complete training days are
// sparsified with a seed derived from (grid.seed, beta index, repetition),
// every variant is trained per cluster on the same sparse data, and all are
// scored on the same complete test days. Errors are normalized by cluster
// size before aggregation; the headline number weights every prediction
// equally, the mean-of-means column averages per-(cluster, repetition) MAEs.
inline EvaluationReport run_experiment(
    const std::map<std::string, std::vector<ObservationSequence>>& train,
    const std::map<std::string, std::vector<ObservationSequence>>& test, int p,
    const ExperimentGrid& grid, const TrainingConfig& base_cfg = {}, int jobs = 1) {
    if (train.empty()) throw domain_error("run_experiment: no training clusters");
    if (grid.repetitions < 1) throw domain_error("run_experiment: repetitions must be >= 1");
    for (const auto& [cid, seqs] : train) {
        if (seqs.empty()) throw domain_error("run_experiment: cluster '" + cid + "' empty");
        if (!test.count(cid))
            throw domain_error("run_experiment: no test data for cluster '" + cid + "'");
    }

    struct Task {
        size_t beta_idx;
        int rep;
        const std::string* cluster;
        const std::vector<ObservationSequence>* train_seqs;
        const std::vector<ObservationSequence>* test_seqs;
        int num_states;
    };
    std::vector<Task> tasks;
    for (size_t b = 0; b < grid.betas.size(); ++b)
        for (int r = 0; r < grid.repetitions; ++r)
            for (const auto& [cid, seqs] : train)
                tasks.push_back({b, r, &cid, &seqs, &test.at(cid),
                                 seqs.front().cluster_size + 1});

    const size_t V = grid.variants.size(), H = grid.horizons.size();
    struct TaskResult {
        std::vector<HorizonStats> stats;      // V * H
        std::vector<double> train_seconds;    // V
        std::vector<char> converged;          // V
        int cluster_size = 1;
    };
    std::vector<TaskResult> results(tasks.size());

    detail::parallel_for(tasks.size(), jobs, [&](size_t ti) {
        const Task& tk = tasks[ti];
        SparsityConfig sc;
        sc.beta = grid.betas[tk.beta_idx];
        sc.seed = detail::splitmix64(grid.seed ^ (0xb5297a4dull * (tk.beta_idx + 1)) ^
                                     (0x68e31da4ull * (tk.rep + 1)));
        auto sparse = sparsify(*tk.train_seqs, sc);

        TaskResult res;
        res.cluster_size = tk.num_states - 1;
        res.stats.resize(V * H);
        res.train_seconds.resize(V, 0.0);
        res.converged.assign(V, 1);
        for (size_t v = 0; v < V; ++v) {
            auto tp = detail::train_variant(grid.variants[v], sparse, p, tk.num_states,
                                            base_cfg, grid.horizons);
            res.train_seconds[v] = tp.train_seconds;
            res.converged[v] = tp.converged ? 1 : 0;
            auto stats = evaluate_predictor(tp.fn, *tk.test_seqs, grid.horizons, p,
                                            grid.window_start, grid.window_end);
            for (size_t h = 0; h < H; ++h) res.stats[v * H + h] = stats[h];
        }
        results[ti] = std::move(res);
    });

    EvaluationReport report;
    for (size_t v = 0; v < V; ++v) {
        VariantSummary sum;
        sum.model = variant_name(grid.variants[v]);
        sum.kind = grid.variants[v].kind;
        sum.homogeneous = grid.variants[v].homogeneous;
        double sum_abs = 0.0, sum_sq = 0.0;
        for (size_t b = 0; b < grid.betas.size(); ++b) {
            for (size_t h = 0; h < H; ++h) {
                EvaluationRow row;
                row.model = sum.model;
                row.beta = grid.betas[b];
                row.horizon = grid.horizons[h];
                double abs_norm = 0.0, sq_norm = 0.0, mom = 0.0;
                long mom_n = 0;
                for (size_t ti = 0; ti < tasks.size(); ++ti) {
                    if (tasks[ti].beta_idx != b) continue;
                    const auto& st = results[ti].stats[v * H + h];
                    double M = results[ti].cluster_size;
                    abs_norm += st.abs_sum / M;
                    sq_norm += st.sq_sum / (M * M);
                    row.count += st.count;
                    row.skipped += st.skipped;
                    if (st.count > 0) {
                        mom += st.abs_sum / (st.count * M);
                        mom_n += 1;
                    }
                }
                row.norm_mae = row.count > 0 ? abs_norm / row.count : 0.0;
                row.norm_mae_mean_of_means = mom_n > 0 ? mom / mom_n : 0.0;
                row.norm_rmse = row.count > 0 ? std::sqrt(sq_norm / row.count) : 0.0;
                sum_abs += abs_norm;
                sum_sq += sq_norm;
                sum.count += row.count;
                if (v == 0) report.total_skipped += row.skipped;
                report.rows.push_back(std::move(row));
            }
        }
        for (size_t ti = 0; ti < tasks.size(); ++ti) {
            sum.train_seconds_mean += results[ti].train_seconds[v];
            sum.trainings += 1;
            if (!results[ti].converged[v]) sum.non_converged += 1;
        }
        if (sum.trainings > 0) sum.train_seconds_mean /= sum.trainings;
        sum.norm_mae = sum.count > 0 ? sum_abs / sum.count : 0.0;
        sum.norm_rmse = sum.count > 0 ? std::sqrt(sum_sq / sum.count) : 0.0;
        report.summaries.push_back(std::move(sum));
    }
    return report;
}

struct TrainerTiming {
    std::string trainer;
    std::vector<double> seconds;

    double mean() const {
        double s = 0.0;
        for (double v : seconds) s += v;
        return seconds.empty() ? 0.0 : s / seconds.size();
    }
    double stddev() const {
        if (seconds.size() < 2) return 0.0;
        double m = mean(), s = 0.0;
        for (double v : seconds) s += (v - m) * (v - m);
        return std::sqrt(s / (seconds.size() - 1));
    }
};

// Wall-clock comparison of trainers on identical input. Runs are interleaved
// (every trainer once per repetition, in listed order) so slow drift in
// machine load spreads evenly instead of biasing whichever trainer went last.
inline std::vector<TrainerTiming> benchmark_training(
    const std::vector<ObservationSequence>& seqs, int p, int num_states,
    const TrainingConfig& cfg, int repetitions,
    const std::vector<ModelKind>& trainers = {ModelKind::baum_welch, ModelKind::heuristic}) {
    if (repetitions < 1) throw domain_error("benchmark_training: repetitions must be >= 1");
    using clock = std::chrono::steady_clock;
    std::vector<TrainerTiming> out;
    for (ModelKind k : trainers) out.push_back({kind_name(k), {}});
    for (int r = 0; r < repetitions; ++r) {
        for (size_t t = 0; t < trainers.size(); ++t) {
            auto t0 = clock::now();
            switch (trainers[t]) {
                case ModelKind::baum_welch:
                    train_baum_welch(seqs, p, num_states, cfg);
                    break;
                case ModelKind::heuristic:
                    train_heuristic(seqs, p, num_states, cfg);
                    break;
                case ModelKind::standard:
                    estimate_observed_pairs(seqs, p, num_states, cfg);
                    break;
                default:
                    throw domain_error("benchmark_training: unsupported trainer");
            }
            out[t].seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
        }
    }
    return out;
}

struct GranularityResult {
    double cluster_norm_mae = 0.0;
    double mean_resource_norm_mae = 0.0;
    std::vector<double> resource_norm_mae;
};

// Same-data comparison of modeling granularity: one joint model of the
// cluster count versus independent two-state models per resource, both
// Baum-Welch, both scored as normalized MAE over the same targets.
inline GranularityResult compare_granularity(
    const std::vector<ObservationSequence>& cluster_train,
    const std::vector<ObservationSequence>& cluster_test,
    const std::vector<std::vector<ObservationSequence>>& resource_train,
    const std::vector<std::vector<ObservationSequence>>& resource_test, int p,
    const std::vector<int>& horizons, int window_start, int window_end,
    const TrainingConfig& cfg = {}) {
    if (resource_train.size() != resource_test.size())
        throw domain_error("compare_granularity: resource set size mismatch");
    GranularityResult out;

    const int M = cluster_train.front().cluster_size;
    auto res = train_baum_welch(cluster_train, p, M + 1, cfg);
    CompositeCache cache(res.model, horizons);
    auto stats = evaluate_predictor(
        [&](int last, Timestamp time, int d) {
            return cache.predict(last, cycle_position_of(time, p), d);
        },
        cluster_test, horizons, p, window_start, window_end);
    double abs = 0.0;
    long cnt = 0;
    for (const auto& st : stats) {
        abs += st.abs_sum;
        cnt += st.count;
    }
    out.cluster_norm_mae = cnt > 0 ? abs / cnt / M : 0.0;

    for (size_t r = 0; r < resource_train.size(); ++r) {
        auto rres = train_baum_welch(resource_train[r], p, 2, cfg);
        CompositeCache rcache(rres.model, horizons);
        auto rstats = evaluate_predictor(
            [&](int last, Timestamp time, int d) {
                return rcache.predict(last, cycle_position_of(time, p), d);
            },
            resource_test[r], horizons, p, window_start, window_end);
        double rabs = 0.0;
        long rcnt = 0;
        for (const auto& st : rstats) {
            rabs += st.abs_sum;
            rcnt += st.count;
        }
        out.resource_norm_mae.push_back(rcnt > 0 ? rabs / rcnt : 0.0);
    }
    for (double v : out.resource_norm_mae) out.mean_resource_norm_mae += v;
    if (!out.resource_norm_mae.empty())
        out.mean_resource_norm_mae /= out.resource_norm_mae.size();
    return out;
}

}  // namespace cymark
