#pragma once

// Brute-force oracles the tests check the library against. Everything here is
// deliberately reimplemented from scratch (explicit enumeration, no scaling,
// no DP shared with the library) so agreement actually means something.

#include <cmath>
#include <functional>
#include <vector>

#include <cymark/model.hpp>
#include <cymark/sequence.hpp>

namespace testutil {

inline int oracle_position(cymark::Timestamp start, int k, int p) {
    std::int64_t m = (start + k) % p;
    if (m < 0) m += p;
    return static_cast<int>(m) + 1;
}

inline cymark::ObservationSequence make_seq(std::string cluster_id, int cluster_size,
                                            cymark::Timestamp start, std::vector<int> values) {
    cymark::ObservationSequence s;
    s.cluster_id = std::move(cluster_id);
    s.cluster_size = cluster_size;
    s.start = start;
    s.values = std::move(values);
    return s;
}

// All constrained paths of a gap: endpoints fixed, interior nodes free within
// the band spanned by the endpoints. Counts are exact integers.
struct GapEnumeration {
    int lo = 0;
    int hi = 0;
    unsigned long long total = 0;
    // edges[u][(i-lo)*B + (j-lo)]: how many paths use edge i->j at offset u.
    std::vector<std::vector<unsigned long long>> edges;
};

inline GapEnumeration enumerate_gap_paths(int from, int to, int length) {
    GapEnumeration g;
    g.lo = std::min(from, to);
    g.hi = std::max(from, to);
    const int B = g.hi - g.lo + 1;
    g.edges.assign(length, std::vector<unsigned long long>(B * B, 0));
    std::vector<int> node(length + 1);
    node[0] = from;
    node[length] = to;
    std::function<void(int)> rec = [&](int k) {
        if (k == length) {
            ++g.total;
            for (int u = 0; u < length; ++u)
                ++g.edges[u][(node[u] - g.lo) * B + (node[u + 1] - g.lo)];
            return;
        }
        for (int s = g.lo; s <= g.hi; ++s) {
            node[k] = s;
            rec(k + 1);
        }
    };
    rec(1);
    return g;
}

// Exact posteriors of a cyclic model with identity/missing emission, by
// summing over every state path. Only usable for tiny T and N.
struct BrutePosteriors {
    double likelihood = 0.0;
    double log_likelihood = 0.0;
    std::vector<std::vector<double>> gamma;  // [T][N]
    std::vector<std::vector<double>> xi;     // [T-1][N*N]
};

inline BrutePosteriors brute_posteriors(const cymark::CyclicMarkovModel& m,
                                        const cymark::ObservationSequence& seq) {
    const int T = seq.length();
    const int n = m.num_states;
    const int p = m.cycle_length;
    BrutePosteriors out;
    out.gamma.assign(T, std::vector<double>(n, 0.0));
    if (T > 1) out.xi.assign(T - 1, std::vector<double>(n * n, 0.0));

    auto emit = [&](int state, int value) -> double {
        if (value < 0) return 1.0;
        return state == value ? 1.0 : 0.0;
    };

    std::vector<int> q(T);
    std::function<void(int, double)> rec = [&](int t, double prob) {
        if (prob == 0.0) return;
        if (t == T) {
            out.likelihood += prob;
            for (int k = 0; k < T; ++k) out.gamma[k][q[k]] += prob;
            for (int k = 0; k + 1 < T; ++k) out.xi[k][q[k] * n + q[k + 1]] += prob;
            return;
        }
        for (int s = 0; s < n; ++s) {
            q[t] = s;
            double step;
            if (t == 0) {
                step = m.initial_at(oracle_position(seq.start, 0, p), s);
            } else {
                step = m.transition(oracle_position(seq.start, t - 1, p), q[t - 1], s);
            }
            rec(t + 1, prob * step * emit(s, seq.values[t]));
        }
    };
    rec(0, 1.0);

    out.log_likelihood = std::log(out.likelihood);
    if (out.likelihood > 0.0) {
        for (auto& row : out.gamma)
            for (double& v : row) v /= out.likelihood;
        for (auto& row : out.xi)
            for (double& v : row) v /= out.likelihood;
    }
    return out;
}

// Complete-data transition counting done the pedestrian way, used to check
// both the standard estimator and the Baum-Welch collapse on full data.
// Returns raw counts; normalization is the caller's business.
inline std::vector<double> count_transitions(const std::vector<cymark::ObservationSequence>& seqs,
                                             int p, int n) {
    std::vector<double> counts(static_cast<size_t>(p) * n * n, 0.0);
    for (const auto& s : seqs)
        for (int k = 0; k + 1 < s.length(); ++k) {
            int a = s.values[k], b = s.values[k + 1];
            if (a < 0 || b < 0) continue;
            int x = oracle_position(s.start, k, p);
            counts[(static_cast<size_t>(x - 1) * n + a) * n + b] += 1.0;
        }
    return counts;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
    return worst;
}

}  // namespace testutil
