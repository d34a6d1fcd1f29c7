#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "cymark/sequence.hpp"

namespace cymark {

struct SparsityConfig {
    double beta = 60.0;     // mean inter-observation time in minutes
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace detail

// Stable per-sequence seed so sparsification of a dataset is reproducible and
// order-independent: each (run seed, cluster, day) triple always draws the
// same observation times, no matter how work is scheduled across threads.
inline std::uint64_t derive_sequence_seed(std::uint64_t seed, std::string_view cluster_id,
                                          std::int64_t day_index) {
    std::uint64_t h = detail::splitmix64(seed ^ detail::fnv1a(cluster_id));
    return detail::splitmix64(h ^ static_cast<std::uint64_t>(day_index));
}

// Exponential inter-observation draw via inverse-transform sampling on an
// explicitly specified engine, rounded to whole minutes with a minimum of 1.
// std::exponential_distribution is avoided on purpose: its output is not
// pinned by the standard, this is bit-stable across platforms.
inline std::int64_t draw_gap_minutes(std::mt19937_64& rng, double beta) {
    double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    double e = -beta * std::log1p(-u);
    std::int64_t gap = std::llround(e);
    return gap < 1 ? 1 : gap;
}

// Thins a complete sequence down to exponentially spaced probe times: the
// first observation falls one draw after the sequence start (nothing
// guarantees the first minute is kept), every other minute becomes missing.
// As beta -> 0 every gap rounds up to the 1-minute minimum and the output
// equals the input.
inline ObservationSequence sparsify(const ObservationSequence& seq, const SparsityConfig& cfg) {
    seq.validate();
    if (!seq.complete())
        throw domain_error("sparsify: input sequence already contains missing values");
    if (cfg.beta <= 0.0) throw domain_error("sparsify: beta must be > 0");

    std::mt19937_64 rng(
        derive_sequence_seed(cfg.seed, seq.cluster_id, seq.start / kMinutesPerDay));

    ObservationSequence out = seq;
    std::fill(out.values.begin(), out.values.end(), kMissingValue);
    const std::int64_t T = seq.length();
    std::int64_t t = 0;
    while (true) {
        t += draw_gap_minutes(rng, cfg.beta);
        if (t > T) break;
        out.values[t - 1] = seq.values[t - 1];
    }
    return out;
}

inline std::vector<ObservationSequence> sparsify(const std::vector<ObservationSequence>& seqs,
                                                 const SparsityConfig& cfg) {
    std::vector<ObservationSequence> out;
    out.reserve(seqs.size());
    for (const auto& s : seqs) out.push_back(sparsify(s, cfg));
    return out;
}

}  // namespace cymark
