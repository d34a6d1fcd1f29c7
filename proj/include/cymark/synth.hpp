#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cymark/estimation.hpp"
#include "cymark/model.hpp"
#include "cymark/sampler.hpp"
#include "cymark/sequence.hpp"

namespace cymark {

// Knobs for synthetic ground-truth models. self_affinity controls how sticky
// states are (parking availability moves slowly); time_varying blends two
// random anchor matrices sinusoidally across the cycle, giving every position
// its own dynamics while keeping rows smooth in x.
struct SynthOptions {
    double min_entry = 0.05;
    double self_affinity = 0.8;
    bool time_varying = true;
};

namespace detail {

inline double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::vector<double> random_anchor(std::mt19937_64& rng, int n, const SynthOptions& opt) {
    std::vector<double> mat(static_cast<size_t>(n) * n);
    std::vector<double> w(n), row(n);
    for (int i = 0; i < n; ++i) {
        double total = 0.0;
        for (int j = 0; j < n; ++j) {
            w[j] = unit_draw(rng) + 1e-3;
            total += w[j];
        }
        for (int j = 0; j < n; ++j) {
            w[j] = (1.0 - opt.self_affinity) * (w[j] / total);
            if (j == i) w[j] += opt.self_affinity;
        }
        floor_row(w, row, opt.min_entry);
        for (int j = 0; j < n; ++j) mat[static_cast<size_t>(i) * n + j] = row[j];
    }
    return mat;
}

}  // namespace detail

// Random cyclic ground-truth model with all transition entries >= min_entry.
inline CyclicMarkovModel make_random_model(int p, int num_states, std::uint64_t seed,
                                           const SynthOptions& opt = {}) {
    if (num_states < 1 || p < 1) throw domain_error("make_random_model: bad dimensions");
    if (num_states > 1 && opt.min_entry * num_states >= 1.0)
        throw domain_error("make_random_model: min_entry too large for N");
    std::mt19937_64 rng(seed);
    const int n = num_states;
    auto R0 = detail::random_anchor(rng, n, opt);
    auto R1 = opt.time_varying ? detail::random_anchor(rng, n, opt) : R0;

    CyclicMarkovModel m(n, p);
    for (int x = 1; x <= p; ++x) {
        double wx = std::sin(M_PI * (x - 1) / p);
        wx *= wx;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double a = R0[static_cast<size_t>(i) * n + j];
                double b = R1[static_cast<size_t>(i) * n + j];
                // a + wx*(b-a) is exact at wx == 0 and when b == a, so the
                // time-invariant variant repeats one matrix bit for bit; the
                // clamp keeps rounding from dipping a floored entry below
                // min_entry.
                m.transition(x, i, j) = std::max(a + wx * (b - a), opt.min_entry);
            }
        for (int i = 0; i < n; ++i) m.initial_at(x, i) = 1.0 / n;
    }
    return m;
}

namespace detail {

inline int draw_state(std::mt19937_64& rng, const double* row, int n) {
    double u = unit_draw(rng);
    double acc = 0.0;
    for (int j = 0; j < n - 1; ++j) {
        acc += row[j];
        if (u < acc) return j;
    }
    return n - 1;
}

}  // namespace detail

// Samples one complete trajectory of the given length from the model,
// anchored at an absolute start minute (which fixes the cycle positions).
inline ObservationSequence sample_sequence(const CyclicMarkovModel& m, int length,
                                           std::uint64_t seed, Timestamp start = 0,
                                           const std::string& cluster_id = "synth") {
    if (length < 1) throw domain_error("sample_sequence: length must be >= 1");
    std::mt19937_64 rng(seed);
    const int n = m.num_states, p = m.cycle_length;

    ObservationSequence seq;
    seq.cluster_id = cluster_id;
    seq.cluster_size = n - 1;
    seq.start = start;
    seq.values.resize(length);

    std::vector<double> pi(m.initial_row(cycle_position_of(start, p)).begin(),
                           m.initial_row(cycle_position_of(start, p)).end());
    int q = detail::draw_state(rng, pi.data(), n);
    seq.values[0] = q;
    for (int k = 1; k < length; ++k) {
        int x = cycle_position_of(start + k - 1, p);
        q = detail::draw_state(rng, m.transition_matrix(x) + static_cast<size_t>(q) * n, n);
        seq.values[k] = q;
    }
    return seq;
}

// One sequence per "day", each anchored a full day apart so positions stay
// aligned for any p dividing 1440.
inline std::vector<ObservationSequence> sample_sequences(const CyclicMarkovModel& m,
                                                         int num_sequences, int length,
                                                         std::uint64_t seed,
                                                         const std::string& cluster_id = "synth",
                                                         Timestamp first_start = 0) {
    std::vector<ObservationSequence> out;
    out.reserve(num_sequences);
    for (int s = 0; s < num_sequences; ++s)
        out.push_back(sample_sequence(m, length,
                                      detail::splitmix64(seed ^ (0x51ed2701ull * (s + 1))),
                                      first_start + static_cast<Timestamp>(s) * kMinutesPerDay,
                                      cluster_id));
    return out;
}

// Correlated per-resource views of a cluster trajectory: resource b is free
// exactly when at least b+1 resources are free ("stacked" assignment, the
// strongest correlation consistent with the counts). Summing the derived
// binary sequences reproduces the cluster sequence; minutes unobserved at the
// cluster stay unobserved in every bay view, so per-resource training sees
// the same observation times as cluster-level training.
inline std::vector<ObservationSequence> derive_stacked_bays(const ObservationSequence& cluster) {
    cluster.validate();
    std::vector<ObservationSequence> bays;
    for (int b = 0; b < cluster.cluster_size; ++b) {
        ObservationSequence s;
        s.cluster_id = cluster.cluster_id + "/bay" + std::to_string(b);
        s.cluster_size = 1;
        s.start = cluster.start;
        s.values.resize(cluster.values.size());
        for (size_t k = 0; k < cluster.values.size(); ++k)
            s.values[k] = cluster.values[k] < 0 ? kMissingValue
                                                : (cluster.values[k] >= b + 1 ? 1 : 0);
        bays.push_back(std::move(s));
    }
    return bays;
}

}  // namespace cymark
