#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "cymark/model.hpp"
#include "cymark/sequence.hpp"

namespace cymark {

struct TrainingConfig {
    double epsilon_convergence = 1e-4;  // max-entry change threshold for Baum-Welch
    int max_iterations = 100;
    double init_diagonal_mass = 0.99;   // self-transition mass of the default init model
    double smoothing_floor = 1e-6;      // lower bound on every transition probability
    bool homogeneous = false;           // pool statistics across cycle positions

    void validate(int num_states) const {
        if (epsilon_convergence <= 0.0)
            throw domain_error("TrainingConfig: epsilon_convergence must be > 0");
        if (max_iterations < 1)
            throw domain_error("TrainingConfig: max_iterations must be >= 1");
        if (init_diagonal_mass <= 0.0 || init_diagonal_mass > 1.0)
            throw domain_error("TrainingConfig: init_diagonal_mass must be in (0, 1]");
        if (smoothing_floor <= 0.0 || smoothing_floor * num_states >= 1.0)
            throw domain_error("TrainingConfig: smoothing_floor must satisfy 0 < floor * N < 1");
    }
};

// Projects non-negative weights onto the floor-constrained simplex
// {a : a_j >= floor, sum a_j = 1}, maximizing sum_j w_j log a_j. This is the
// exact KKT solution (water-filling), not clamp-and-renormalize: entries whose
// proportional share falls below the floor are pinned there and the remaining
// mass is split proportionally among the rest. Using the exact projection
// keeps every Baum-Welch iteration a proper constrained M-step, so the
// log-likelihood stays monotone even when the floor binds.
inline void floor_row(std::span<const double> weights, std::span<double> out, double floor) {
    const int n = static_cast<int>(weights.size());
    if (floor <= 0.0 || floor * n >= 1.0)
        throw domain_error("floor_row: need 0 < floor * N < 1");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw domain_error("floor_row: negative weight");
        total += w;
    }
    if (total <= 0.0) throw domain_error("floor_row: all weights zero");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return weights[a] < weights[b]; });

    // Pin the k smallest entries at the floor, smallest first, until the
    // smallest unpinned entry's proportional share clears the floor.
    int pinned = 0;
    double rest = total;
    while (pinned < n - 1) {
        double scale = (1.0 - floor * pinned) / rest;
        if (weights[order[pinned]] * scale >= floor) break;
        rest -= weights[order[pinned]];
        ++pinned;
    }
    double scale = rest > 0.0 ? (1.0 - floor * pinned) / rest : 0.0;
    for (int k = 0; k < n; ++k) {
        int j = order[k];
        out[j] = k < pinned ? floor : weights[j] * scale;
    }
    // Guard against the all-but-one-zero case leaving rest == 0.
    if (rest <= 0.0) {
        for (int k = pinned; k < n; ++k) out[order[k]] = (1.0 - floor * pinned) / (n - pinned);
    }
}

// Default initialization row: most mass on the self transition, remainder
// spread uniformly. Already satisfies the floor for any sane configuration,
// but floored anyway so the invariant never depends on parameter choices.
inline std::vector<double> init_transition_row(int num_states, int self,
                                               const TrainingConfig& cfg) {
    std::vector<double> w(num_states, 0.0);
    if (num_states == 1) {
        w[0] = 1.0;
        return w;
    }
    double off = (1.0 - cfg.init_diagonal_mass) / (num_states - 1);
    for (int j = 0; j < num_states; ++j) w[j] = j == self ? cfg.init_diagonal_mass : off;
    std::vector<double> out(num_states);
    floor_row(w, out, cfg.smoothing_floor);
    return out;
}

// Near-identity model used as the Baum-Welch starting point and the fallback
// for never-visited rows; initial distributions uniform.
inline CyclicMarkovModel make_initial_model(int p, int num_states, const TrainingConfig& cfg) {
    CyclicMarkovModel m(num_states, p);
    for (int i = 0; i < num_states; ++i) {
        auto row = init_transition_row(num_states, i, cfg);
        for (int x = 1; x <= p; ++x)
            std::copy(row.begin(), row.end(), m.transition_row(x, i).begin());
    }
    for (int x = 1; x <= p; ++x)
        for (int i = 0; i < num_states; ++i) m.initial_at(x, i) = 1.0 / num_states;
    return m;
}

namespace detail {

inline void check_training_input(const std::vector<ObservationSequence>& seqs, int p,
                                 int num_states) {
    if (seqs.empty()) throw domain_error("training: no sequences");
    if (p < 1) throw domain_error("training: cycle length must be >= 1");
    if (num_states < 1) throw domain_error("training: num_states must be >= 1");
    for (const auto& s : seqs) {
        s.validate();
        if (s.cluster_size != num_states - 1)
            throw domain_error("training: sequence cluster_size " +
                               std::to_string(s.cluster_size) + " incompatible with N = " +
                               std::to_string(num_states));
    }
}

}  // namespace detail

// Per-position empirical distribution of observed values, floored. Positions
// that were never observed fall back to the pooled distribution over all
// positions (uniform when there are no observations at all). Used as the
// fixed initial-state distribution by every trainer.
inline void estimate_initial_distribution(const std::vector<ObservationSequence>& seqs,
                                          CyclicMarkovModel& m, double floor) {
    const int p = m.cycle_length, n = m.num_states;
    std::vector<double> counts(static_cast<size_t>(p) * n, 0.0);
    std::vector<double> pooled(n, 0.0);
    for (const auto& s : seqs) {
        for (int k = 0; k < s.length(); ++k) {
            int v = s.values[k];
            if (v < 0) continue;
            counts[static_cast<size_t>(s.position_of(k, p) - 1) * n + v] += 1.0;
            pooled[v] += 1.0;
        }
    }
    double pooled_total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
    std::vector<double> pooled_row(n, 1.0);
    if (pooled_total > 0.0) pooled_row = pooled;
    for (int x = 1; x <= p; ++x) {
        std::span<const double> src{counts.data() + static_cast<size_t>(x - 1) * n,
                                    static_cast<size_t>(n)};
        double rowsum = std::accumulate(src.begin(), src.end(), 0.0);
        floor_row(rowsum > 0.0 ? src : std::span<const double>(pooled_row),
                  m.initial_row(x), floor);
    }
}

namespace detail {

// Shared counting core: accumulates observed adjacent transitions into
// per-position counts, then normalizes with init-row fallback and the floor.
inline CyclicMarkovModel estimate_from_counts(const std::vector<ObservationSequence>& seqs,
                                              int p, int num_states, const TrainingConfig& cfg) {
    const int n = num_states;
    std::vector<double> counts(static_cast<size_t>(p) * n * n, 0.0);
    for (const auto& s : seqs) {
        for (int k = 0; k + 1 < s.length(); ++k) {
            int a = s.values[k], b = s.values[k + 1];
            if (a < 0 || b < 0) continue;
            int x = s.position_of(k, p);
            counts[(static_cast<size_t>(x - 1) * n + a) * n + b] += 1.0;
        }
    }
    if (cfg.homogeneous) {
        // Pool over positions; every A_x becomes the same matrix.
        std::vector<double> pooledc(static_cast<size_t>(n) * n, 0.0);
        for (int x = 0; x < p; ++x)
            for (int ij = 0; ij < n * n; ++ij)
                pooledc[ij] += counts[static_cast<size_t>(x) * n * n + ij];
        for (int x = 0; x < p; ++x)
            std::copy(pooledc.begin(), pooledc.end(),
                      counts.begin() + static_cast<size_t>(x) * n * n);
    }

    CyclicMarkovModel m(n, p);
    m.cluster_id = seqs.front().cluster_id;
    for (int x = 1; x <= p; ++x) {
        for (int i = 0; i < n; ++i) {
            std::span<const double> row{counts.data() + (static_cast<size_t>(x - 1) * n + i) * n,
                                        static_cast<size_t>(n)};
            double rowsum = std::accumulate(row.begin(), row.end(), 0.0);
            if (rowsum > 0.0) {
                floor_row(row, m.transition_row(x, i), cfg.smoothing_floor);
            } else {
                auto fallback = init_transition_row(n, i, cfg);
                std::copy(fallback.begin(), fallback.end(), m.transition_row(x, i).begin());
            }
        }
    }
    estimate_initial_distribution(seqs, m, cfg.smoothing_floor);
    return m;
}

}  // namespace detail

// Maximum-likelihood estimator for complete data: per-position transition
// frequencies. Rejects sequences containing missing values.
inline CyclicMarkovModel estimate_complete(const std::vector<ObservationSequence>& seqs, int p,
                                           int num_states, const TrainingConfig& cfg = {}) {
    detail::check_training_input(seqs, p, num_states);
    cfg.validate(num_states);
    for (const auto& s : seqs)
        if (!s.complete())
            throw domain_error("estimate_complete: sequence '" + s.cluster_id +
                               "' contains missing values");
    return detail::estimate_from_counts(seqs, p, num_states, cfg);
}

// Same counting estimator applied to sparse data: only adjacent pairs where
// both minutes were observed contribute. This is the "standard algorithm on
// sparse data" baseline; with gap-free input it coincides with
// estimate_complete exactly.
inline CyclicMarkovModel estimate_observed_pairs(const std::vector<ObservationSequence>& seqs,
                                                 int p, int num_states,
                                                 const TrainingConfig& cfg = {}) {
    detail::check_training_input(seqs, p, num_states);
    cfg.validate(num_states);
    return detail::estimate_from_counts(seqs, p, num_states, cfg);
}

}  // namespace cymark
