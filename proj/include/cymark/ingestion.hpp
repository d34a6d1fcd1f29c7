#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cymark/io.hpp"
#include "cymark/sequence.hpp"
#include "cymark/time.hpp"

namespace cymark {

struct StayRecord {
    std::string bay_id;
    Timestamp arrival = 0;    // floored to the minute
    Timestamp departure = 0;  // exclusive: the bay frees up in this minute
};

// Stays CSV: `bay_id,arrival,departure` with ISO-8601 timestamps (seconds
// allowed, floored). Rows with departure <= arrival at minute resolution are
// malformed and rejected.
inline std::vector<StayRecord> parse_stays(std::istream& is) {
    std::vector<StayRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("bay_id", 0) == 0) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 3)
            throw schema_error("stays line " + std::to_string(lineno) + ": expected 3 fields");
        if (f[0].empty())
            throw schema_error("stays line " + std::to_string(lineno) + ": empty bay id");
        auto a = parse_timestamp(f[1]);
        auto d = parse_timestamp(f[2]);
        if (!a || !d)
            throw schema_error("stays line " + std::to_string(lineno) + ": bad timestamp");
        if (*d <= *a)
            throw schema_error("stays line " + std::to_string(lineno) +
                               ": departure not after arrival");
        out.push_back({f[0], *a, *d});
    }
    return out;
}

inline std::vector<StayRecord> parse_stays_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open: " + path);
    return parse_stays(f);
}

// Clusters CSV: `cluster_id,bay_id`, one row per member bay. A bay may belong
// to at most one cluster.
inline std::map<std::string, std::vector<std::string>> parse_clusters(std::istream& is) {
    std::map<std::string, std::vector<std::string>> out;
    std::set<std::string> seen_bays;
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("cluster_id", 0) == 0) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 2)
            throw schema_error("clusters line " + std::to_string(lineno) + ": expected 2 fields");
        if (f[0].empty() || f[1].empty())
            throw schema_error("clusters line " + std::to_string(lineno) + ": empty field");
        if (!seen_bays.insert(f[1]).second)
            throw schema_error("clusters line " + std::to_string(lineno) + ": bay '" + f[1] +
                               "' assigned to more than one cluster");
        out[f[0]].push_back(f[1]);
    }
    return out;
}

inline std::map<std::string, std::vector<std::string>> parse_clusters_file(
    const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open: " + path);
    return parse_clusters(f);
}

// Which 1-based weeks (7-day blocks counted from the range start) feed the
// training and testing sets. Weekends are skipped by default, matching how
// the availability patterns are modeled (weekday cycle).
struct DatasetSplit {
    std::vector<int> training_weeks;
    std::vector<int> testing_weeks;
    bool weekday_only = true;
};

struct IngestReport {
    long stays_total = 0;
    long stays_excluded_over_24h = 0;
    long stays_unknown_bay = 0;   // referenced a bay not in any cluster
    long stays_outside_range = 0;
    long weekend_days_skipped = 0;
    long days_outside_split = 0;  // weekdays in range not in any selected week
    long train_days = 0;
    long test_days = 0;
    std::map<std::string, int> cluster_sizes;
};

struct IngestResult {
    std::map<std::string, std::vector<ObservationSequence>> train;
    std::map<std::string, std::vector<ObservationSequence>> test;
    IngestReport report;
};

// Turns raw stays into gap-free per-cluster, per-day availability sequences:
// value[t] = cluster size minus the number of member bays covered by a stay
// at minute t (closed-open [arrival, departure)). Overlapping stays of the
// same bay are merged first so a bay never counts twice. Days with no stays
// at all still emit, constant at full availability.
inline IngestResult build_sequences(const std::vector<StayRecord>& stays,
                                    const std::map<std::string, std::vector<std::string>>& clusters,
                                    std::int64_t first_day, int num_weeks,
                                    const DatasetSplit& split) {
    if (num_weeks < 1) throw domain_error("build_sequences: need at least one week");
    if (clusters.empty()) throw domain_error("build_sequences: no clusters");
    for (int w : split.training_weeks)
        if (w < 1 || w > num_weeks)
            throw domain_error("build_sequences: training week out of range");
    for (int w : split.testing_weeks) {
        if (w < 1 || w > num_weeks)
            throw domain_error("build_sequences: testing week out of range");
        if (std::find(split.training_weeks.begin(), split.training_weeks.end(), w) !=
            split.training_weeks.end())
            throw domain_error("build_sequences: week " + std::to_string(w) +
                               " in both training and testing");
    }

    IngestResult res;
    std::map<std::string, int> bay_cluster_index;  // bay -> index into cluster arrays
    std::vector<std::string> cluster_ids;
    std::vector<int> cluster_size;
    for (const auto& [cid, bays] : clusters) {
        for (const auto& b : bays) bay_cluster_index[b] = static_cast<int>(cluster_ids.size());
        cluster_ids.push_back(cid);
        cluster_size.push_back(static_cast<int>(bays.size()));
        res.report.cluster_sizes[cid] = static_cast<int>(bays.size());
    }

    const Timestamp range_begin = first_day * kMinutesPerDay;
    const Timestamp range_end = (first_day + 7l * num_weeks) * kMinutesPerDay;
    const size_t range_minutes = static_cast<size_t>(range_end - range_begin);

    // Merge each bay's stays on the shared timeline, then accumulate per
    // cluster as +/-1 boundary deltas.
    std::map<std::string, std::vector<std::pair<Timestamp, Timestamp>>> by_bay;
    for (const auto& st : stays) {
        res.report.stays_total += 1;
        auto it = bay_cluster_index.find(st.bay_id);
        if (it == bay_cluster_index.end()) {
            res.report.stays_unknown_bay += 1;
            continue;
        }
        if (st.departure - st.arrival > kMinutesPerDay) {
            res.report.stays_excluded_over_24h += 1;
            continue;
        }
        Timestamp a = std::max(st.arrival, range_begin);
        Timestamp d = std::min(st.departure, range_end);
        if (a >= d) {
            res.report.stays_outside_range += 1;
            continue;
        }
        by_bay[st.bay_id].emplace_back(a, d);
    }

    std::vector<std::vector<int>> delta(cluster_ids.size(),
                                        std::vector<int>(range_minutes + 1, 0));
    for (auto& [bay, iv] : by_bay) {
        std::sort(iv.begin(), iv.end());
        int ci = bay_cluster_index[bay];
        Timestamp cur_a = iv.front().first, cur_d = iv.front().second;
        auto flush = [&](Timestamp a, Timestamp d) {
            delta[ci][a - range_begin] += 1;
            delta[ci][d - range_begin] -= 1;
        };
        for (size_t k = 1; k < iv.size(); ++k) {
            if (iv[k].first <= cur_d) {
                cur_d = std::max(cur_d, iv[k].second);
            } else {
                flush(cur_a, cur_d);
                cur_a = iv[k].first;
                cur_d = iv[k].second;
            }
        }
        flush(cur_a, cur_d);
    }

    std::set<int> train_set(split.training_weeks.begin(), split.training_weeks.end());
    std::set<int> test_set(split.testing_weeks.begin(), split.testing_weeks.end());

    for (size_t ci = 0; ci < cluster_ids.size(); ++ci) {
        std::vector<int> occupied(range_minutes, 0);
        int acc = 0;
        for (size_t t = 0; t < range_minutes; ++t) {
            acc += delta[ci][t];
            occupied[t] = acc;
        }
        for (std::int64_t day = first_day; day < first_day + 7l * num_weeks; ++day) {
            int week = static_cast<int>((day - first_day) / 7) + 1;
            bool in_train = train_set.count(week) > 0;
            bool in_test = test_set.count(week) > 0;
            if (split.weekday_only && !is_weekday(day)) {
                if (ci == 0 && (in_train || in_test)) res.report.weekend_days_skipped += 1;
                continue;
            }
            if (!in_train && !in_test) {
                if (ci == 0) res.report.days_outside_split += 1;
                continue;
            }
            ObservationSequence seq;
            seq.cluster_id = cluster_ids[ci];
            seq.cluster_size = cluster_size[ci];
            seq.start = day * kMinutesPerDay;
            seq.values.resize(kMinutesPerDay);
            size_t off = static_cast<size_t>((day - first_day) * kMinutesPerDay);
            for (int t = 0; t < kMinutesPerDay; ++t)
                seq.values[t] = cluster_size[ci] - occupied[off + t];
            if (in_train) {
                res.train[cluster_ids[ci]].push_back(std::move(seq));
                if (ci == 0) res.report.train_days += 1;
            } else {
                res.test[cluster_ids[ci]].push_back(std::move(seq));
                if (ci == 0) res.report.test_days += 1;
            }
        }
    }
    return res;
}

}  // namespace cymark
