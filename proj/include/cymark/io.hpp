#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cymark/model.hpp"
#include "cymark/sequence.hpp"

namespace cymark {

inline constexpr int kModelFormatVersion = 1;

// Model JSON layout: dimensions, per-position transition matrices and initial
// distributions, optional observation override, free-form metadata. nlohmann
// serializes doubles with shortest-round-trip formatting, so save/load is
// bit-exact.
inline nlohmann::json model_to_json(const CyclicMarkovModel& m,
                                    const nlohmann::json& metadata = nlohmann::json::object()) {
    nlohmann::json j;
    j["format"] = "cymark-model";
    j["version"] = kModelFormatVersion;
    j["num_states"] = m.num_states;
    j["cycle_length"] = m.cycle_length;
    j["cluster_id"] = m.cluster_id;
    auto& tr = j["transitions"] = nlohmann::json::array();
    for (int x = 1; x <= m.cycle_length; ++x) {
        nlohmann::json mat = nlohmann::json::array();
        for (int i = 0; i < m.num_states; ++i) {
            auto row = m.transition_row(x, i);
            mat.push_back(std::vector<double>(row.begin(), row.end()));
        }
        tr.push_back(std::move(mat));
    }
    auto& init = j["initial"] = nlohmann::json::array();
    for (int x = 1; x <= m.cycle_length; ++x) {
        auto row = m.initial_row(x);
        init.push_back(std::vector<double>(row.begin(), row.end()));
    }
    if (m.observation) {
        nlohmann::json obs = nlohmann::json::array();
        for (int i = 0; i < m.num_states; ++i)
            obs.push_back(std::vector<double>(
                m.observation->begin() + static_cast<size_t>(i) * m.num_states,
                m.observation->begin() + static_cast<size_t>(i + 1) * m.num_states));
        j["observation"] = std::move(obs);
    } else {
        j["observation"] = "identity_with_missing";
    }
    if (!metadata.empty()) j["metadata"] = metadata;
    return j;
}

inline CyclicMarkovModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "cymark-model")
            throw schema_error("model file: unexpected format tag");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw schema_error("model file: unsupported version");
        int n = j.at("num_states").get<int>();
        int p = j.at("cycle_length").get<int>();
        if (n < 1 || p < 1) throw schema_error("model file: bad dimensions");
        CyclicMarkovModel m(n, p);
        m.cluster_id = j.value("cluster_id", std::string{});
        const auto& tr = j.at("transitions");
        const auto& init = j.at("initial");
        if (static_cast<int>(tr.size()) != p || static_cast<int>(init.size()) != p)
            throw schema_error("model file: matrix count does not match cycle_length");
        for (int x = 1; x <= p; ++x) {
            const auto& mat = tr[x - 1];
            if (static_cast<int>(mat.size()) != n)
                throw schema_error("model file: transition matrix has wrong row count");
            for (int i = 0; i < n; ++i) {
                const auto& row = mat[i];
                if (static_cast<int>(row.size()) != n)
                    throw schema_error("model file: transition row has wrong length");
                for (int jj = 0; jj < n; ++jj) m.transition(x, i, jj) = row[jj].get<double>();
            }
            const auto& irow = init[x - 1];
            if (static_cast<int>(irow.size()) != n)
                throw schema_error("model file: initial row has wrong length");
            for (int i = 0; i < n; ++i) m.initial_at(x, i) = irow[i].get<double>();
        }
        const auto& obs = j.at("observation");
        if (obs.is_array()) {
            std::vector<double> o(static_cast<size_t>(n) * n);
            if (static_cast<int>(obs.size()) != n)
                throw schema_error("model file: observation matrix has wrong row count");
            for (int i = 0; i < n; ++i)
                for (int jj = 0; jj < n; ++jj)
                    o[static_cast<size_t>(i) * n + jj] = obs[i][jj].get<double>();
            m.observation = std::move(o);
        } else if (obs.get<std::string>() != "identity_with_missing") {
            throw schema_error("model file: unknown observation model");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(std::string("model file: ") + e.what());
    }
}

inline void save_model(const CyclicMarkovModel& m, const std::string& path,
                       const nlohmann::json& metadata = nlohmann::json::object()) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << model_to_json(m, metadata).dump(1) << "\n";
    if (!f) throw io_error("write failed: " + path);
}

inline CyclicMarkovModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(path + ": " + e.what());
    }
    return model_from_json(j);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

// Observation CSV: one `cluster_id,timestamp,count` row per observed minute;
// missing minutes are simply absent. Sequences are day-shaped: reading groups
// rows into per-(cluster, civil day) sequences of 1440 minutes starting at
// midnight, with unobserved minutes set to the missing sentinel.
inline void write_observation_csv(std::ostream& os,
                                  const std::vector<ObservationSequence>& seqs) {
    os << "cluster_id,timestamp,count\n";
    for (const auto& s : seqs)
        for (int k = 0; k < s.length(); ++k)
            if (s.values[k] >= 0)
                os << s.cluster_id << ',' << format_timestamp(s.time_of(k)) << ','
                   << s.values[k] << "\n";
}

inline void write_observation_csv(const std::string& path,
                                  const std::vector<ObservationSequence>& seqs) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open for writing: " + path);
    write_observation_csv(f, seqs);
    if (!f) throw io_error("write failed: " + path);
}

// cluster_sizes maps cluster id -> M. Rows for clusters absent from the map
// are a schema error, as are counts outside [0..M]; timestamps with a seconds
// field are floored to the minute.
inline std::vector<ObservationSequence> read_observation_csv(
    std::istream& is, const std::map<std::string, int>& cluster_sizes) {
    // (cluster, day) -> sequence under construction, ordered for determinism
    std::map<std::pair<std::string, std::int64_t>, ObservationSequence> days;
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("cluster_id", 0) == 0) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 3)
            throw schema_error("observations line " + std::to_string(lineno) +
                               ": expected 3 fields");
        auto ts = parse_timestamp(f[1]);
        if (!ts)
            throw schema_error("observations line " + std::to_string(lineno) +
                               ": bad timestamp '" + f[1] + "'");
        auto sz = cluster_sizes.find(f[0]);
        if (sz == cluster_sizes.end())
            throw schema_error("observations line " + std::to_string(lineno) +
                               ": unknown cluster '" + f[0] + "'");
        int count;
        try {
            size_t used = 0;
            count = std::stoi(f[2], &used);
            if (used != f[2].size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw schema_error("observations line " + std::to_string(lineno) +
                               ": bad count '" + f[2] + "'");
        }
        if (count < 0 || count > sz->second)
            throw schema_error("observations line " + std::to_string(lineno) + ": count " +
                               std::to_string(count) + " outside [0.." +
                               std::to_string(sz->second) + "]");
        std::int64_t day = *ts / kMinutesPerDay;
        auto key = std::make_pair(f[0], day);
        auto it = days.find(key);
        if (it == days.end()) {
            ObservationSequence s;
            s.cluster_id = f[0];
            s.cluster_size = sz->second;
            s.start = day * kMinutesPerDay;
            s.values.assign(kMinutesPerDay, kMissingValue);
            it = days.emplace(key, std::move(s)).first;
        }
        it->second.values[*ts % kMinutesPerDay] = count;
    }
    std::vector<ObservationSequence> out;
    out.reserve(days.size());
    for (auto& [key, seq] : days) out.push_back(std::move(seq));
    return out;
}

inline std::vector<ObservationSequence> read_observation_csv(
    const std::string& path, const std::map<std::string, int>& cluster_sizes) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open: " + path);
    return read_observation_csv(f, cluster_sizes);
}

// Sidecar `cluster_id,size` table emitted by ingestion so later stages know N
// without re-reading the cluster definitions.
inline void write_cluster_sizes(const std::string& path, const std::map<std::string, int>& sizes) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << "cluster_id,size\n";
    for (const auto& [id, sz] : sizes) f << id << ',' << sz << "\n";
    if (!f) throw io_error("write failed: " + path);
}

inline std::map<std::string, int> read_cluster_sizes(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open: " + path);
    std::map<std::string, int> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("cluster_id", 0) == 0) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw schema_error("cluster sizes line " + std::to_string(lineno) +
                               ": expected 2 fields");
        try {
            out[fields[0]] = std::stoi(fields[1]);
        } catch (const std::exception&) {
            throw schema_error("cluster sizes line " + std::to_string(lineno) + ": bad size");
        }
        if (out[fields[0]] < 1)
            throw schema_error("cluster sizes line " + std::to_string(lineno) +
                               ": size must be >= 1");
    }
    return out;
}

}  // namespace cymark
