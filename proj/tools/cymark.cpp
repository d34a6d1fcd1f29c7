// cymark command-line tool: ingest raw stays, sparsify, train, predict,
// evaluate, benchmark, and generate synthetic datasets. Every run writes a
// JSON manifest next to its outputs recording the parameters and seeds, so
// any artifact can be regenerated bit-identically (timestamps live only in
// the manifest).

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <cymark/cymark.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cymark;

namespace {

constexpr const char* kVersion = "0.1.0";

// Propagating a one-hot distribution is O(d * N^2); refuse absurd horizons
// instead of spinning for minutes on a typo'd year.
constexpr int kMaxPredictHorizon = 2 * 366 * kMinutesPerDay;

std::string iso_utc(std::chrono::system_clock::time_point tp) {
    std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[80];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

// Accumulates the run manifest; write() stamps the end time. One per run.
struct Manifest {
    json j;
    std::chrono::system_clock::time_point t0;

    explicit Manifest(const std::string& subcommand)
        : t0(std::chrono::system_clock::now()) {
        j["tool"] = "cymark";
        j["version"] = kVersion;
        j["subcommand"] = subcommand;
        j["parameters"] = json::object();
        j["inputs"] = json::array();
        j["outputs"] = json::array();
        j["seeds"] = json::object();
        j["started_at"] = iso_utc(t0);
    }

    template <typename T>
    void param(const std::string& name, const T& v) {
        j["parameters"][name] = v;
    }
    void input(const std::string& path) { j["inputs"].push_back(path); }
    void output(const std::string& path) { j["outputs"].push_back(path); }
    void seed(const std::string& name, std::uint64_t v) { j["seeds"][name] = v; }

    void write(const std::string& path) {
        auto t1 = std::chrono::system_clock::now();
        j["finished_at"] = iso_utc(t1);
        j["duration_seconds"] = std::chrono::duration<double>(t1 - t0).count();
        std::ofstream f(path);
        if (!f) throw io_error("cannot open for writing: " + path);
        f << j.dump(1) << "\n";
        if (!f) throw io_error("write failed: " + path);
    }
};

std::map<std::string, std::vector<ObservationSequence>> group_by_cluster(
    std::vector<ObservationSequence> seqs) {
    std::map<std::string, std::vector<ObservationSequence>> out;
    for (auto& s : seqs) out[s.cluster_id].push_back(std::move(s));
    return out;
}

// Cluster sizes come from a sidecar file, or from --states applied to every
// cluster id found in the given observation files.
std::map<std::string, int> resolve_sizes(const std::string& sizes_path, int states,
                                         const std::vector<std::string>& csv_paths) {
    if (!sizes_path.empty()) return read_cluster_sizes(sizes_path);
    if (states < 2)
        throw domain_error("need --sizes FILE or --states N (N >= 2)");
    std::map<std::string, int> out;
    for (const auto& path : csv_paths) {
        std::ifstream f(path);
        if (!f) throw io_error("cannot open: " + path);
        std::string line;
        size_t lineno = 0;
        while (std::getline(f, line)) {
            ++lineno;
            if (line.empty()) continue;
            if (lineno == 1 && line.rfind("cluster_id", 0) == 0) continue;
            auto fields = detail::split_csv_line(line);
            if (!fields.empty() && !fields[0].empty()) out[fields[0]] = states - 1;
        }
    }
    if (out.empty()) throw schema_error("no observation rows to infer clusters from");
    return out;
}

// Single cluster of interest: the --cluster flag, or the only one present.
template <typename V>
const std::string& pick_cluster(const std::map<std::string, V>& groups,
                                const std::string& requested) {
    if (!requested.empty()) {
        auto it = groups.find(requested);
        if (it == groups.end())
            throw domain_error("cluster '" + requested + "' not in input");
        return it->first;
    }
    if (groups.size() == 1) return groups.begin()->first;
    std::string names;
    for (const auto& [id, v] : groups) names += (names.empty() ? "" : ", ") + id;
    throw domain_error("input has " + std::to_string(groups.size()) +
                       " clusters (" + names + "); pick one with --cluster");
}

std::int64_t parse_date(const std::string& s) {
    int y = 0, m = 0, d = 0;
    char extra = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d%c", &y, &m, &d, &extra) != 3)
        throw domain_error("bad date '" + s + "', expected YYYY-MM-DD");
    std::int64_t day = days_from_civil(y, m, d);
    int yy = 0, mm = 0, dd = 0;
    civil_from_days(day, yy, mm, dd);
    if (yy != y || mm != m || dd != d)
        throw domain_error("invalid calendar date '" + s + "'");
    return day;
}

Timestamp parse_time_flag(const std::string& s, const char* flag) {
    auto ts = parse_timestamp(s);
    if (!ts)
        throw domain_error(std::string(flag) + ": bad timestamp '" + s +
                           "', expected YYYY-MM-DDTHH:MM");
    return *ts;
}

void parse_window(const std::string& s, int p, int& lo, int& hi) {
    if (s.empty()) {
        // The reference protocol window (7am to 11pm) only makes sense for
        // the minute-of-day cycle; other cycle lengths default to all of it.
        if (p == 1440) {
            lo = 421;
            hi = 1381;
        } else {
            lo = 1;
            hi = p;
        }
        return;
    }
    char extra = 0;
    if (std::sscanf(s.c_str(), "%d:%d%c", &lo, &hi, &extra) != 2)
        throw domain_error("bad --window '" + s + "', expected START:END");
}

ModelKind parse_kind(std::string name) {
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (name == "bw") return ModelKind::baum_welch;
    if (name == "heur") return ModelKind::heuristic;
    if (name == "std") return ModelKind::standard;
    if (name == "avg") return ModelKind::average;
    if (name == "last") return ModelKind::last;
    throw domain_error("unknown model kind '" + name +
                       "' (expected bw, heur, std, avg, or last)");
}

std::vector<ModelVariant> variants_from(const std::vector<std::string>& names) {
    if (names.empty()) return default_variants();
    std::vector<ModelVariant> out;
    for (const auto& n : names) {
        ModelKind k = parse_kind(n);
        if (k == ModelKind::last) {
            out.push_back({k, false});
        } else {
            out.push_back({k, false});
            out.push_back({k, true});
        }
    }
    return out;
}

std::string manifest_path_for(const std::string& primary_output) {
    return primary_output + ".manifest.json";
}

// ---------------------------------------------------------------- ingest --

struct IngestOpts {
    std::string stays, clusters, from, out_dir;
    int weeks = 8;
    std::vector<int> train_weeks, test_weeks;
    bool include_weekends = false;
};

int run_ingest(const IngestOpts& o) {
    Manifest man("ingest");
    man.param("stays", o.stays);
    man.param("clusters", o.clusters);
    man.param("from", o.from);
    man.param("weeks", o.weeks);
    man.param("train_weeks", o.train_weeks);
    man.param("test_weeks", o.test_weeks);
    man.param("include_weekends", o.include_weekends);
    man.param("out", o.out_dir);
    man.input(o.stays);
    man.input(o.clusters);

    std::int64_t first_day = parse_date(o.from);
    auto stays = parse_stays_file(o.stays);
    auto clusters = parse_clusters_file(o.clusters);

    DatasetSplit split;
    split.training_weeks = o.train_weeks;
    split.testing_weeks = o.test_weeks;
    split.weekday_only = !o.include_weekends;

    auto result = build_sequences(stays, clusters, first_day, o.weeks, split);

    fs::create_directories(o.out_dir);
    auto train_path = (fs::path(o.out_dir) / "train.csv").string();
    auto test_path = (fs::path(o.out_dir) / "test.csv").string();
    auto sizes_path = (fs::path(o.out_dir) / "cluster_sizes.csv").string();

    std::vector<ObservationSequence> train_flat, test_flat;
    for (auto& [cid, seqs] : result.train)
        for (auto& s : seqs) train_flat.push_back(std::move(s));
    for (auto& [cid, seqs] : result.test)
        for (auto& s : seqs) test_flat.push_back(std::move(s));
    write_observation_csv(train_path, train_flat);
    write_observation_csv(test_path, test_flat);
    write_cluster_sizes(sizes_path, result.report.cluster_sizes);
    man.output(train_path);
    man.output(test_path);
    man.output(sizes_path);

    const auto& r = result.report;
    std::cout << "clusters: " << r.cluster_sizes.size();
    char sep = ' ';
    for (const auto& [cid, sz] : r.cluster_sizes) {
        std::cout << sep << '(' << cid << ": " << sz << (sz == 1 ? " bay)" : " bays)");
        sep = ' ';
    }
    std::cout << "\nstays: " << r.stays_total << " total, " << r.stays_excluded_over_24h
              << " excluded >24h, " << r.stays_unknown_bay << " unknown bay, "
              << r.stays_outside_range << " outside range\n";
    std::cout << "days: " << r.train_days << " train, " << r.test_days << " test, "
              << r.weekend_days_skipped << " weekend skipped, " << r.days_outside_split
              << " outside split\n";
    std::cout << "wrote " << train_path << ", " << test_path << ", " << sizes_path << "\n";

    man.write((fs::path(o.out_dir) / "manifest.json").string());
    return 0;
}

// -------------------------------------------------------------- sparsify --

struct SparsifyOpts {
    std::string input, sizes, out;
    int states = 0;
    double beta = 60.0;
    std::uint64_t seed = 0;
};

int run_sparsify(const SparsifyOpts& o) {
    Manifest man("sparsify");
    man.param("input", o.input);
    man.param("sizes", o.sizes);
    man.param("states", o.states);
    man.param("beta", o.beta);
    man.param("seed", o.seed);
    man.param("out", o.out);
    man.input(o.input);
    man.seed("sparsify", o.seed);

    auto sizes = resolve_sizes(o.sizes, o.states, {o.input});
    auto seqs = read_observation_csv(o.input, sizes);

    SparsityConfig cfg;
    cfg.beta = o.beta;
    cfg.seed = o.seed;
    auto sparse = sparsify(seqs, cfg);

    long kept = 0, total = 0;
    for (size_t i = 0; i < seqs.size(); ++i) {
        kept += sparse[i].observed_count();
        total += seqs[i].observed_count();
    }
    write_observation_csv(o.out, sparse);
    man.output(o.out);

    std::cout << "kept " << kept << " of " << total << " observations ("
              << std::fixed << std::setprecision(2) << 100.0 * kept / std::max(1l, total)
              << "%) at beta=" << o.beta << "\n";
    std::cout << "wrote " << o.out << "\n";
    man.write(manifest_path_for(o.out));
    return 0;
}

// ----------------------------------------------------------------- train --

struct TrainOpts {
    std::string method = "bw";
    std::string input, sizes, cluster, out = "model.json", warm_start, trace;
    int states = 0;
    int p = 1440;
    double epsilon = 1e-4;
    int max_iterations = 100;
    double init_diagonal_mass = 0.99;
    double floor = 1e-6;
    bool homogeneous = false;
};

int run_train(const TrainOpts& o) {
    Manifest man("train");
    man.param("method", o.method);
    man.param("beta_file", o.input);
    man.param("sizes", o.sizes);
    man.param("states", o.states);
    man.param("cluster", o.cluster);
    man.param("p", o.p);
    man.param("epsilon", o.epsilon);
    man.param("max_iterations", o.max_iterations);
    man.param("init_diagonal_mass", o.init_diagonal_mass);
    man.param("floor", o.floor);
    man.param("homogeneous", o.homogeneous);
    man.param("warm_start", o.warm_start);
    man.param("trace", o.trace);
    man.param("out", o.out);
    man.input(o.input);
    if (!o.warm_start.empty()) man.input(o.warm_start);

    auto sizes = resolve_sizes(o.sizes, o.states, {o.input});
    auto groups = group_by_cluster(read_observation_csv(o.input, sizes));
    const std::string& cid = pick_cluster(groups, o.cluster);
    const auto& seqs = groups.at(cid);
    const int num_states = sizes.at(cid) + 1;

    TrainingConfig cfg;
    cfg.epsilon_convergence = o.epsilon;
    cfg.max_iterations = o.max_iterations;
    cfg.init_diagonal_mass = o.init_diagonal_mass;
    cfg.smoothing_floor = o.floor;
    cfg.homogeneous = o.homogeneous;

    std::optional<CyclicMarkovModel> warm;
    if (!o.warm_start.empty()) warm = load_model(o.warm_start);

    ModelKind kind = parse_kind(o.method);
    CyclicMarkovModel model;
    bool converged = true;
    int iterations = 0;
    std::vector<double> trace;
    switch (kind) {
        case ModelKind::baum_welch: {
            auto res = train_baum_welch(seqs, o.p, num_states, cfg, warm);
            model = std::move(res.model);
            converged = res.converged;
            iterations = res.iterations;
            trace = std::move(res.log_likelihood_trace);
            break;
        }
        case ModelKind::heuristic:
            model = train_heuristic(seqs, o.p, num_states, cfg);
            break;
        case ModelKind::standard:
            model = estimate_observed_pairs(seqs, o.p, num_states, cfg);
            break;
        default:
            throw domain_error("--method must be bw, heur, or std");
    }
    model.cluster_id = cid;

    json meta;
    meta["method"] = kind_name(kind);
    meta["homogeneous"] = o.homogeneous;
    meta["trained_from"] = o.input;
    meta["sequences"] = seqs.size();
    if (kind == ModelKind::baum_welch) {
        meta["converged"] = converged;
        meta["iterations"] = iterations;
    }
    save_model(model, o.out, meta);
    man.output(o.out);
    std::cout << "trained " << kind_name(kind) << (o.homogeneous ? " hom." : " inhom.")
              << " model for cluster '" << cid << "' (p=" << o.p << ", N=" << num_states
              << ", " << seqs.size() << " sequences)\n";

    if (!o.trace.empty()) {
        if (kind != ModelKind::baum_welch)
            throw domain_error("--trace is only meaningful with --method bw");
        std::ofstream f(o.trace);
        if (!f) throw io_error("cannot open for writing: " + o.trace);
        f << "iteration,log_likelihood\n" << std::setprecision(17);
        for (size_t i = 0; i < trace.size(); ++i) f << i + 1 << ',' << trace[i] << "\n";
        man.output(o.trace);
        std::cout << "wrote " << o.trace << " (" << trace.size() << " iterations)\n";
    }
    std::cout << "wrote " << o.out << "\n";

    if (kind == ModelKind::baum_welch) {
        std::cout << (converged ? "converged" : "did NOT converge") << " after "
                  << iterations << " iteration" << (iterations == 1 ? "" : "s") << "\n";
    }
    man.write(manifest_path_for(o.out));
    if (kind == ModelKind::baum_welch && !converged) return 4;
    return 0;
}

// --------------------------------------------------------------- predict --

struct PredictOpts {
    std::string model, target, last_time, observations, sizes, cluster, distribution;
    int last = -1;
};

int run_predict(const PredictOpts& o) {
    Manifest man("predict");
    man.param("model", o.model);
    man.param("last", o.last);
    man.param("last_time", o.last_time);
    man.param("target", o.target);
    man.param("observations", o.observations);
    man.param("sizes", o.sizes);
    man.param("cluster", o.cluster);
    man.param("distribution", o.distribution);
    man.input(o.model);

    auto m = load_model(o.model);
    Timestamp target = parse_time_flag(o.target, "--target");

    int last = o.last;
    Timestamp last_time = 0;
    if (!o.last_time.empty()) {
        if (!o.observations.empty())
            throw domain_error("give either --last/--last-time or --observations, not both");
        if (last < 0) throw domain_error("--last-time requires --last");
        last_time = parse_time_flag(o.last_time, "--last-time");
    } else if (!o.observations.empty()) {
        // Search mode: latest observed value before the target, any gap. The
        // effective horizon is reported since it is no longer the caller's d.
        man.input(o.observations);
        auto sizes = resolve_sizes(o.sizes, m.num_states, {o.observations});
        auto groups = group_by_cluster(read_observation_csv(o.observations, sizes));
        const std::string& cid = pick_cluster(groups, o.cluster);
        bool found = false;
        for (const auto& s : groups.at(cid)) {
            for (int k = 0; k < s.length(); ++k) {
                if (s.values[k] < 0) continue;
                Timestamp t = s.time_of(k);
                if (t < target && (!found || t > last_time)) {
                    last_time = t;
                    last = s.values[k];
                    found = true;
                }
            }
        }
        if (!found)
            throw domain_error("no observation before " + format_timestamp(target) +
                               " in '" + cid + "'; refusing to guess");
    } else {
        throw domain_error("need --last and --last-time, or --observations");
    }

    std::int64_t d64 = target - last_time;
    if (d64 < 1) throw domain_error("--target must be after the last observation");
    if (d64 > kMaxPredictHorizon)
        throw domain_error("horizon of " + std::to_string(d64) + " minutes is too large");
    int d = static_cast<int>(d64);

    PredictionRequest req;
    req.last_observation = last;
    req.last_observation_time = last_time;
    req.horizon = d;
    double expected = predict(m, req);

    int x = cycle_position_of(last_time, m.cycle_length);
    auto dist = propagate(m, one_hot(m.num_states, last), x, d);

    std::cout << "last observation: " << last << " at " << format_timestamp(last_time)
              << "\n";
    std::cout << "target: " << format_timestamp(target) << " (horizon " << d
              << " min, cycle position "
              << cycle_position_of(target, m.cycle_length) << ")\n";
    std::cout << std::setprecision(10) << "expected available: " << expected << "\n";
    std::cout << "most likely count: " << most_likely_state(dist) << "\n";

    if (!o.distribution.empty()) {
        std::ofstream f(o.distribution);
        if (!f) throw io_error("cannot open for writing: " + o.distribution);
        f << "state,probability\n" << std::setprecision(17);
        for (size_t i = 0; i < dist.size(); ++i) f << i << ',' << dist[i] << "\n";
        man.output(o.distribution);
        std::cout << "wrote " << o.distribution << "\n";
        man.write(manifest_path_for(o.distribution));
    } else {
        man.write("cymark-predict.manifest.json");
    }
    return 0;
}

// -------------------------------------------------------------- evaluate --

struct EvaluateOpts {
    std::string train, test, sizes, window, out = "report.csv";
    int states = 0;
    int p = 1440;
    std::vector<double> betas{30.0, 60.0, 120.0};
    std::vector<int> horizons{15, 30, 60, 120, 240};
    int reps = 4;
    std::uint64_t seed = 0;
    std::vector<std::string> models;
    int jobs = 1;
    double epsilon = 1e-4;
    int max_iterations = 100;
    double init_diagonal_mass = 0.99;
    double floor = 1e-6;
};

int run_evaluate(const EvaluateOpts& o) {
    Manifest man("evaluate");
    man.param("train", o.train);
    man.param("test", o.test);
    man.param("sizes", o.sizes);
    man.param("states", o.states);
    man.param("p", o.p);
    man.param("betas", o.betas);
    man.param("horizons", o.horizons);
    man.param("reps", o.reps);
    man.param("seed", o.seed);
    man.param("window", o.window);
    man.param("models", o.models);
    man.param("jobs", o.jobs);
    man.param("epsilon", o.epsilon);
    man.param("max_iterations", o.max_iterations);
    man.param("init_diagonal_mass", o.init_diagonal_mass);
    man.param("floor", o.floor);
    man.param("out", o.out);
    man.input(o.train);
    man.input(o.test);
    man.seed("experiment", o.seed);

    auto sizes = resolve_sizes(o.sizes, o.states, {o.train, o.test});
    auto train = group_by_cluster(read_observation_csv(o.train, sizes));
    auto test = group_by_cluster(read_observation_csv(o.test, sizes));

    ExperimentGrid grid;
    grid.betas = o.betas;
    grid.horizons = o.horizons;
    grid.repetitions = o.reps;
    grid.seed = o.seed;
    parse_window(o.window, o.p, grid.window_start, grid.window_end);
    grid.variants = variants_from(o.models);

    TrainingConfig cfg;
    cfg.epsilon_convergence = o.epsilon;
    cfg.max_iterations = o.max_iterations;
    cfg.init_diagonal_mass = o.init_diagonal_mass;
    cfg.smoothing_floor = o.floor;

    auto report = run_experiment(train, test, o.p, grid, cfg, o.jobs);

    {
        std::ofstream f(o.out);
        if (!f) throw io_error("cannot open for writing: " + o.out);
        f << "model,beta,horizon,norm_mae,norm_mae_mean_of_means,norm_rmse,count,skipped\n"
          << std::setprecision(17);
        for (const auto& r : report.rows)
            f << r.model << ',' << r.beta << ',' << r.horizon << ',' << r.norm_mae << ','
              << r.norm_mae_mean_of_means << ',' << r.norm_rmse << ',' << r.count << ','
              << r.skipped << "\n";
    }
    man.output(o.out);

    auto summary_path = o.out + ".summary.csv";
    {
        std::ofstream f(summary_path);
        if (!f) throw io_error("cannot open for writing: " + summary_path);
        f << "model,norm_mae,norm_rmse,count,train_seconds_mean,trainings,non_converged\n"
          << std::setprecision(17);
        for (const auto& s : report.summaries)
            f << s.model << ',' << s.norm_mae << ',' << s.norm_rmse << ',' << s.count << ','
              << s.train_seconds_mean << ',' << s.trainings << ',' << s.non_converged
              << "\n";
    }
    man.output(summary_path);

    // Table shaped like the reference results: one row per model kind,
    // homogeneous and inhomogeneous side by side (normalized MAE over the
    // whole grid).
    std::map<std::string, std::pair<double, double>> table;  // kind -> (hom, inhom)
    for (const auto& s : report.summaries) {
        auto& cell = table.try_emplace(kind_name(s.kind), -1.0, -1.0).first->second;
        (s.homogeneous ? cell.first : cell.second) = s.norm_mae;
    }
    std::cout << "normalized MAE over " << o.betas.size() << " beta x " << o.reps
              << " repetitions x " << o.horizons.size() << " horizons\n";
    std::cout << std::left << std::setw(8) << "model" << std::right << std::setw(10)
              << "hom." << std::setw(10) << "inhom." << "\n";
    for (const char* k : {"BW", "HEUR", "STD", "AVG", "LAST"}) {
        auto it = table.find(k);
        if (it == table.end()) continue;
        auto print_cell = [](double v) {
            if (v < 0.0)
                std::cout << std::setw(10) << "-";
            else
                std::cout << std::setw(10) << std::fixed << std::setprecision(4) << v;
            std::cout << std::defaultfloat;
        };
        std::cout << std::left << std::setw(8) << k << std::right;
        print_cell(it->second.first);
        print_cell(it->second.second);
        std::cout << "\n";
    }
    long preds = 0;
    for (const auto& s : report.summaries) preds = std::max(preds, s.count);
    std::cout << "predictions per variant: " << preds << ", skipped targets: "
              << report.total_skipped << "\n";
    for (const auto& s : report.summaries)
        if (s.non_converged > 0)
            std::cout << "note: " << s.model << ": " << s.non_converged << " of "
                      << s.trainings << " trainings hit the iteration cap\n";
    std::cout << "wrote " << o.out << " and " << summary_path << "\n";

    man.write(manifest_path_for(o.out));
    return 0;
}

// ----------------------------------------------------------------- bench --

struct BenchOpts {
    std::string input, sizes, cluster, out = "timings.csv";
    int states = 0;
    int p = 1440;
    int reps = 5;
    std::vector<std::string> trainers{"bw", "heur"};
    double epsilon = 1e-4;
    int max_iterations = 100;
};

int run_bench(const BenchOpts& o) {
    Manifest man("bench");
    man.param("input", o.input);
    man.param("sizes", o.sizes);
    man.param("states", o.states);
    man.param("cluster", o.cluster);
    man.param("p", o.p);
    man.param("reps", o.reps);
    man.param("trainers", o.trainers);
    man.param("epsilon", o.epsilon);
    man.param("max_iterations", o.max_iterations);
    man.param("out", o.out);
    man.input(o.input);

    auto sizes = resolve_sizes(o.sizes, o.states, {o.input});
    auto groups = group_by_cluster(read_observation_csv(o.input, sizes));
    const std::string& cid = pick_cluster(groups, o.cluster);
    const auto& seqs = groups.at(cid);
    const int num_states = sizes.at(cid) + 1;

    std::vector<ModelKind> kinds;
    for (const auto& t : o.trainers) kinds.push_back(parse_kind(t));

    TrainingConfig cfg;
    cfg.epsilon_convergence = o.epsilon;
    cfg.max_iterations = o.max_iterations;

    auto timings = benchmark_training(seqs, o.p, num_states, cfg, o.reps, kinds);

    std::ofstream f(o.out);
    if (!f) throw io_error("cannot open for writing: " + o.out);
    f << "trainer,repetition,seconds\n" << std::setprecision(17);
    for (const auto& t : timings)
        for (size_t r = 0; r < t.seconds.size(); ++r)
            f << t.trainer << ',' << r + 1 << ',' << t.seconds[r] << "\n";
    man.output(o.out);

    std::cout << "cluster '" << cid << "', " << seqs.size() << " sequences, " << o.reps
              << " repetitions\n" << std::setprecision(4);
    for (const auto& t : timings)
        std::cout << t.trainer << ": mean " << t.mean() << "s (sd " << t.stddev() << ")\n";
    for (size_t a = 0; a < timings.size(); ++a)
        for (size_t b = a + 1; b < timings.size(); ++b)
            if (timings[b].mean() > 0.0)
                std::cout << timings[a].trainer << " / " << timings[b].trainer
                          << " mean ratio: " << timings[a].mean() / timings[b].mean()
                          << "x\n";
    std::cout << "wrote " << o.out << "\n";
    man.write(manifest_path_for(o.out));
    return 0;
}

// ----------------------------------------------------------------- synth --

struct SynthOpts {
    std::string out_dir = ".";
    std::string cluster_id = "synth";
    int p = 1440;
    int states = 0;
    int cycles = 20;
    std::uint64_t seed = 0;
};

int run_synth(const SynthOpts& o) {
    Manifest man("synth");
    man.param("p", o.p);
    man.param("states", o.states);
    man.param("cycles", o.cycles);
    man.param("seed", o.seed);
    man.param("cluster_id", o.cluster_id);
    man.param("out", o.out_dir);
    man.seed("synth", o.seed);

    if (o.states < 2) throw domain_error("--states must be >= 2");
    if (o.cycles < 1) throw domain_error("--cycles must be >= 1");

    auto model = make_random_model(o.p, o.states, o.seed);
    model.cluster_id = o.cluster_id;

    // Length rounds up to whole days so the day-shaped CSV round trip stays
    // gap-free (sparsify and estimate_complete both insist on that).
    std::int64_t want = static_cast<std::int64_t>(o.p) * o.cycles;
    std::int64_t length = (want + kMinutesPerDay - 1) / kMinutesPerDay * kMinutesPerDay;
    if (length > 400 * kMinutesPerDay)
        throw domain_error("refusing to generate more than 400 days of data");
    auto seq = sample_sequence(model, static_cast<int>(length),
                               detail::splitmix64(o.seed ^ 0x7fb5d329728ea185ull), 0,
                               o.cluster_id);

    fs::create_directories(o.out_dir);
    auto model_path = (fs::path(o.out_dir) / "model.json").string();
    auto data_path = (fs::path(o.out_dir) / "complete.csv").string();
    auto sizes_path = (fs::path(o.out_dir) / "cluster_sizes.csv").string();

    json meta;
    meta["generator"] = "synth";
    meta["seed"] = o.seed;
    meta["cycles"] = length / o.p;
    save_model(model, model_path, meta);
    write_observation_csv(data_path, {seq});
    write_cluster_sizes(sizes_path, {{o.cluster_id, o.states - 1}});
    man.output(model_path);
    man.output(data_path);
    man.output(sizes_path);

    std::cout << "ground truth: p=" << o.p << ", N=" << o.states << ", cluster '"
              << o.cluster_id << "'\n";
    std::cout << "trajectory: " << length << " minutes (" << length / o.p << " cycles, "
              << length / kMinutesPerDay << " days)\n";
    std::cout << "wrote " << model_path << ", " << data_path << ", " << sizes_path << "\n";
    man.write((fs::path(o.out_dir) / "manifest.json").string());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cyclic discrete Markov models of resource-cluster availability"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    IngestOpts ing;
    auto* c_ing = app.add_subcommand(
        "ingest", "build per-cluster availability sequences from raw stay records");
    c_ing->add_option("--stays", ing.stays, "stay records CSV (bay_id,arrival,departure)")
        ->required();
    c_ing->add_option("--clusters", ing.clusters, "cluster definition CSV (cluster_id,bay_id)")
        ->required();
    c_ing->add_option("--from", ing.from, "first day of the range, YYYY-MM-DD")->required();
    c_ing->add_option("--weeks", ing.weeks, "number of 7-day weeks in the range");
    c_ing->add_option("--train-weeks", ing.train_weeks, "1-based training week indices")
        ->delimiter(',')
        ->required();
    c_ing->add_option("--test-weeks", ing.test_weeks, "1-based testing week indices")
        ->delimiter(',');
    c_ing->add_flag("--include-weekends", ing.include_weekends,
                    "keep Saturdays and Sundays (skipped by default)");
    c_ing->add_option("--out", ing.out_dir, "output directory")->required();

    SparsifyOpts spa;
    auto* c_spa = app.add_subcommand(
        "sparsify", "thin complete sequences via exponential inter-observation gaps");
    c_spa->add_option("--input", spa.input, "complete observation CSV")->required();
    c_spa->add_option("--sizes", spa.sizes, "cluster sizes CSV (cluster_id,size)");
    c_spa->add_option("--states", spa.states, "uniform state count when --sizes is absent");
    c_spa->add_option("--beta", spa.beta, "mean gap between kept observations, minutes")
        ->required();
    c_spa->add_option("--seed", spa.seed, "sampling seed");
    c_spa->add_option("--out", spa.out, "sparse observation CSV to write")->required();

    TrainOpts tra;
    auto* c_tra = app.add_subcommand("train", "fit a cyclic Markov model to observations");
    c_tra->add_option("--method", tra.method, "trainer: bw, heur, or std");
    c_tra->add_option("--beta-file,--input", tra.input, "observation CSV (sparse or complete)")
        ->required();
    c_tra->add_option("--sizes", tra.sizes, "cluster sizes CSV");
    c_tra->add_option("--states", tra.states, "uniform state count when --sizes is absent");
    c_tra->add_option("--cluster", tra.cluster, "cluster to train on (default: the only one)");
    c_tra->add_option("--p", tra.p, "cycle length in minutes");
    c_tra->add_option("--epsilon", tra.epsilon, "Baum-Welch convergence threshold");
    c_tra->add_option("--max-iterations", tra.max_iterations, "Baum-Welch iteration cap");
    c_tra->add_option("--init-diagonal-mass", tra.init_diagonal_mass,
                      "self-transition mass of the init model");
    c_tra->add_option("--floor", tra.floor, "smoothing floor on transition probabilities");
    c_tra->add_flag("--homogeneous", tra.homogeneous,
                    "pool statistics across cycle positions");
    c_tra->add_option("--warm-start", tra.warm_start, "model file to resume from (bw only)");
    c_tra->add_option("--trace", tra.trace, "write per-iteration log-likelihood CSV here");
    c_tra->add_option("--out,--model", tra.out, "model file to write");

    PredictOpts pre;
    auto* c_pre = app.add_subcommand("predict", "predict availability at a future time");
    c_pre->add_option("--model", pre.model, "trained model file")->required();
    c_pre->add_option("--last", pre.last, "last observed availability count");
    c_pre->add_option("--last-time", pre.last_time, "time of that observation (ISO minute)");
    c_pre->add_option("--observations", pre.observations,
                      "observation CSV to search for the latest observation instead");
    c_pre->add_option("--sizes", pre.sizes, "cluster sizes CSV for --observations");
    c_pre->add_option("--cluster", pre.cluster, "cluster to search in --observations");
    c_pre->add_option("--target", pre.target, "time to predict for (ISO minute)")->required();
    c_pre->add_option("--distribution", pre.distribution,
                      "write the full target state distribution CSV here");

    EvaluateOpts eva;
    auto* c_eva = app.add_subcommand(
        "evaluate", "sparsify, train, and score every model over a beta/horizon grid");
    c_eva->add_option("--train", eva.train, "complete training observation CSV")->required();
    c_eva->add_option("--test", eva.test, "complete testing observation CSV")->required();
    c_eva->add_option("--sizes", eva.sizes, "cluster sizes CSV");
    c_eva->add_option("--states", eva.states, "uniform state count when --sizes is absent");
    c_eva->add_option("--p", eva.p, "cycle length in minutes");
    c_eva->add_option("--betas", eva.betas, "sparsity levels (mean gap, minutes)")
        ->delimiter(',');
    c_eva->add_option("--horizons", eva.horizons, "prediction horizons, minutes")
        ->delimiter(',');
    c_eva->add_option("--reps", eva.reps, "sparsification repetitions per beta");
    c_eva->add_option("--seed", eva.seed, "master experiment seed");
    c_eva->add_option("--window", eva.window,
                      "target cycle-position window START:END (default 421:1381 at p=1440)");
    c_eva->add_option("--models", eva.models,
                      "model kinds to run (bw,heur,std,avg,last; default all)")
        ->delimiter(',');
    c_eva->add_option("--jobs", eva.jobs, "concurrent trainings");
    c_eva->add_option("--epsilon", eva.epsilon, "Baum-Welch convergence threshold");
    c_eva->add_option("--max-iterations", eva.max_iterations, "Baum-Welch iteration cap");
    c_eva->add_option("--init-diagonal-mass", eva.init_diagonal_mass,
                      "self-transition mass of the init model");
    c_eva->add_option("--floor", eva.floor, "smoothing floor on transition probabilities");
    c_eva->add_option("--out", eva.out, "report CSV to write");

    BenchOpts ben;
    auto* c_ben = app.add_subcommand("bench", "time trainers on identical input");
    c_ben->add_option("--input", ben.input, "observation CSV")->required();
    c_ben->add_option("--sizes", ben.sizes, "cluster sizes CSV");
    c_ben->add_option("--states", ben.states, "uniform state count when --sizes is absent");
    c_ben->add_option("--cluster", ben.cluster, "cluster to use (default: the only one)");
    c_ben->add_option("--p", ben.p, "cycle length in minutes");
    c_ben->add_option("--reps", ben.reps, "timing repetitions");
    c_ben->add_option("--trainers", ben.trainers, "trainers to time (bw,heur,std)")
        ->delimiter(',');
    c_ben->add_option("--epsilon", ben.epsilon, "Baum-Welch convergence threshold");
    c_ben->add_option("--max-iterations", ben.max_iterations, "Baum-Welch iteration cap");
    c_ben->add_option("--out", ben.out, "timing CSV to write");

    SynthOpts syn;
    auto* c_syn = app.add_subcommand(
        "synth", "generate a ground-truth model and a complete trajectory from it");
    c_syn->add_option("--p", syn.p, "cycle length in minutes")->required();
    c_syn->add_option("--states", syn.states, "number of availability states N")->required();
    c_syn->add_option("--cycles", syn.cycles,
                      "trajectory length in cycles (rounded up to whole days)")
        ->required();
    c_syn->add_option("--seed", syn.seed, "generator seed");
    c_syn->add_option("--cluster-id", syn.cluster_id, "cluster id to emit");
    c_syn->add_option("--out", syn.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_ing->parsed()) return run_ingest(ing);
        if (c_spa->parsed()) return run_sparsify(spa);
        if (c_tra->parsed()) return run_train(tra);
        if (c_pre->parsed()) return run_predict(pre);
        if (c_eva->parsed()) return run_evaluate(eva);
        if (c_ben->parsed()) return run_bench(ben);
        if (c_syn->parsed()) return run_synth(syn);
    } catch (const schema_error& e) {
        std::cerr << "error (schema): " << e.what() << "\n";
        return 3;
    } catch (const io_error& e) {
        std::cerr << "error (io): " << e.what() << "\n";
        return 5;
    } catch (const domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
