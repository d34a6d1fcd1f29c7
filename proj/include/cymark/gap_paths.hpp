#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "cymark/estimation.hpp"
#include "cymark/model.hpp"
#include "cymark/sequence.hpp"

namespace cymark {

// Path statistics for one observation gap: the set of all L-step state paths
// from `from` to `to` whose every intermediate state stays inside the band
// [min(from,to), max(from,to)]. Arbitrary jumps within the band are allowed,
// so the total path count is B^(L-1) with B the band size. Stored per offset
// as a normalized joint distribution over band edges (each offset's block sums
// to 1), which is also the per-offset evidence weight a gap contributes during
// training. Absolute counts are recovered via log_total_paths when they fit
// in a double.
struct GapPathCounts {
    int from = 0, to = 0;
    int length = 0;    // L, number of transitions
    int band_lo = 0, band_hi = 0;
    std::vector<double> edge_prob;  // L * B * B, offset-major
    double log_total_paths = 0.0;

    int band_size() const { return band_hi - band_lo + 1; }
    bool in_band(int s) const { return s >= band_lo && s <= band_hi; }

    // Normalized share of paths crossing edge (i -> j) at offset u; states are
    // absolute, out-of-band states have share 0.
    double edge(int u, int i, int j) const {
        if (!in_band(i) || !in_band(j)) return 0.0;
        const int B = band_size();
        return edge_prob[(static_cast<size_t>(u) * B + (i - band_lo)) * B + (j - band_lo)];
    }

    double total_paths() const { return std::exp(log_total_paths); }
};

// Counts band-constrained gap paths with a forward/backward pass over the
// band lattice, normalizing each step to keep values bounded for long gaps.
// f_u(i) counts partial paths from `from` reaching state i after u steps;
// g_u(i) counts completions from state i at offset u to `to`.
inline GapPathCounts heuristic_gap_counts(int from, int to, int length) {
    if (from < 0 || to < 0) throw domain_error("heuristic_gap_counts: negative state");
    if (length < 1) throw domain_error("heuristic_gap_counts: gap length must be >= 1");

    GapPathCounts g;
    g.from = from;
    g.to = to;
    g.length = length;
    g.band_lo = std::min(from, to);
    g.band_hi = std::max(from, to);
    const int B = g.band_size();
    const int L = length;

    // Forward counts, normalized per step; scales accumulate in log space.
    std::vector<double> fwd(static_cast<size_t>(L + 1) * B, 0.0);
    std::vector<double> flog(L + 1, 0.0);
    fwd[from - g.band_lo] = 1.0;
    for (int u = 0; u < L; ++u) {
        const double* cur = fwd.data() + static_cast<size_t>(u) * B;
        double* nxt = fwd.data() + static_cast<size_t>(u + 1) * B;
        double total = 0.0;
        for (int i = 0; i < B; ++i) total += cur[i];
        for (int j = 0; j < B; ++j) nxt[j] = total;  // complete connectivity in band
        double z = total * B;
        for (int j = 0; j < B; ++j) nxt[j] /= z;
        flog[u + 1] = flog[u] + std::log(z);
    }

    std::vector<double> bwd(static_cast<size_t>(L + 1) * B, 0.0);
    std::vector<double> blog(L + 1, 0.0);
    bwd[static_cast<size_t>(L) * B + (to - g.band_lo)] = 1.0;
    for (int u = L - 1; u >= 0; --u) {
        const double* nxt = bwd.data() + static_cast<size_t>(u + 1) * B;
        double* cur = bwd.data() + static_cast<size_t>(u) * B;
        double total = 0.0;
        for (int j = 0; j < B; ++j) total += nxt[j];
        for (int i = 0; i < B; ++i) cur[i] = total;
        double z = total * B;
        for (int i = 0; i < B; ++i) cur[i] /= z;
        blog[u] = blog[u + 1] + std::log(z);
    }

    // Paths through edge (i,j) at offset u: f_u(i) * g_{u+1}(j). Each path
    // crosses every offset exactly once, so the per-offset totals all equal
    // the total path count; normalizing per offset gives the edge shares.
    g.edge_prob.assign(static_cast<size_t>(L) * B * B, 0.0);
    for (int u = 0; u < L; ++u) {
        const double* f = fwd.data() + static_cast<size_t>(u) * B;
        const double* b = bwd.data() + static_cast<size_t>(u + 1) * B;
        double* out = g.edge_prob.data() + static_cast<size_t>(u) * B * B;
        double z = 0.0;
        for (int i = 0; i < B; ++i)
            for (int j = 0; j < B; ++j) z += f[i] * b[j];
        for (int i = 0; i < B; ++i)
            for (int j = 0; j < B; ++j) out[i * B + j] = f[i] * b[j] / z;
    }
    // True forward counts are exp(flog[u]) * fwd[u][.]; the total path count
    // is the forward count that actually lands on `to`.
    const double* last = fwd.data() + static_cast<size_t>(L) * B;
    g.log_total_paths = flog[L] + std::log(last[to - g.band_lo]);
    return g;
}

// Gap-path heuristic trainer: a single pass over each sequence, accumulating
// every consecutive observed pair's per-offset edge shares into the cycle
// position the offset falls on, then renormalizing per source state. Direct
// transitions (gap length 1) contribute exactly like complete-data counts, so
// on gap-free input this coincides with estimate_complete.
inline CyclicMarkovModel train_heuristic(const std::vector<ObservationSequence>& seqs, int p,
                                         int num_states, const TrainingConfig& cfg = {}) {
    detail::check_training_input(seqs, p, num_states);
    cfg.validate(num_states);
    const int n = num_states;

    int observed_total = 0;
    for (const auto& s : seqs) observed_total += s.observed_count();
    if (observed_total < 2)
        throw domain_error("train_heuristic: need at least two observed values");

    std::vector<double> acc(static_cast<size_t>(p) * n * n, 0.0);
    std::unordered_map<std::uint64_t, GapPathCounts> cache;

    for (const auto& s : seqs) {
        int prev = -1;
        for (int k = 0; k < s.length(); ++k) {
            if (s.values[k] < 0) continue;
            if (prev >= 0) {
                int from = s.values[prev], to = s.values[k], L = k - prev;
                std::uint64_t key = (static_cast<std::uint64_t>(from) << 44) |
                                    (static_cast<std::uint64_t>(to) << 24) |
                                    static_cast<std::uint64_t>(L);
                auto it = cache.find(key);
                if (it == cache.end())
                    it = cache.emplace(key, heuristic_gap_counts(from, to, L)).first;
                const GapPathCounts& gp = it->second;
                const int B = gp.band_size(), lo = gp.band_lo;
                for (int u = 0; u < L; ++u) {
                    int x = s.position_of(prev + u, p);
                    double* arow = acc.data() + static_cast<size_t>(x - 1) * n * n;
                    const double* e = gp.edge_prob.data() + static_cast<size_t>(u) * B * B;
                    for (int i = 0; i < B; ++i)
                        for (int j = 0; j < B; ++j)
                            arow[(lo + i) * n + (lo + j)] += e[i * B + j];
                }
            }
            prev = k;
        }
    }

    if (cfg.homogeneous) {
        std::vector<double> pooled(static_cast<size_t>(n) * n, 0.0);
        for (int x = 0; x < p; ++x)
            for (int ij = 0; ij < n * n; ++ij)
                pooled[ij] += acc[static_cast<size_t>(x) * n * n + ij];
        for (int x = 0; x < p; ++x)
            std::copy(pooled.begin(), pooled.end(), acc.begin() + static_cast<size_t>(x) * n * n);
    }

    CyclicMarkovModel m(n, p);
    m.cluster_id = seqs.front().cluster_id;
    for (int x = 1; x <= p; ++x) {
        for (int i = 0; i < n; ++i) {
            std::span<const double> row{acc.data() + (static_cast<size_t>(x - 1) * n + i) * n,
                                        static_cast<size_t>(n)};
            double rowsum = 0.0;
            for (double v : row) rowsum += v;
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

}  // namespace cymark
