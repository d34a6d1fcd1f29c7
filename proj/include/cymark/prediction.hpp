#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "cymark/model.hpp"
#include "cymark/sequence.hpp"

namespace cymark {

// Pushes a state distribution d steps forward through the cycle:
// s <- s * A_x * A_{x+1} * ... with positions wrapping mod p. d = 0 returns
// the input unchanged.
inline StateDistribution propagate(const CyclicMarkovModel& m, const StateDistribution& s,
                                   int start_position, int d) {
    const int n = m.num_states, p = m.cycle_length;
    if (static_cast<int>(s.size()) != n)
        throw domain_error("propagate: distribution dimension mismatch");
    if (start_position < 1 || start_position > p)
        throw domain_error("propagate: start position out of range");
    if (d < 0) throw domain_error("propagate: horizon must be >= 0");

    StateDistribution cur = s, nxt(n);
    for (int step = 0; step < d; ++step) {
        int x = (start_position - 1 + step) % p + 1;
        const double* A = m.transition_matrix(x);
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += cur[i] * A[i * n + j];
            nxt[j] = acc;
        }
        cur.swap(nxt);
    }
    return cur;
}

// Expected number of available resources under a state distribution.
inline double expected_available(const StateDistribution& s) {
    double e = 0.0;
    for (size_t i = 0; i < s.size(); ++i) e += static_cast<double>(i) * s[i];
    return e;
}

// Most probable state; ties break toward the lower count.
inline int most_likely_state(const StateDistribution& s) {
    if (s.empty()) throw domain_error("most_likely_state: empty distribution");
    int best = 0;
    for (size_t i = 1; i < s.size(); ++i)
        if (s[i] > s[best]) best = static_cast<int>(i);
    return best;
}

struct PredictionRequest {
    int last_observation = 0;          // availability count at the last known minute
    Timestamp last_observation_time = 0;
    int horizon = 1;                   // d, minutes ahead of the last observation
};

// Point prediction of expected availability d minutes past the last known
// observation: a one-hot distribution at the observed count pushed through
// the cycle. Depends only on the observation's cycle position, not on the
// calendar date.
inline double predict(const CyclicMarkovModel& m, const PredictionRequest& req) {
    if (req.horizon < 1) throw domain_error("predict: horizon must be >= 1");
    if (req.last_observation < 0 || req.last_observation >= m.num_states)
        throw domain_error("predict: last observation out of range");
    int x = cycle_position_of(req.last_observation_time, m.cycle_length);
    auto s = propagate(m, one_hot(m.num_states, req.last_observation), x, req.horizon);
    return expected_available(s);
}

// Historic per-cycle-position mean availability; the AVG baseline.
struct HistoricAverageModel {
    int cycle_length = 0;
    std::string cluster_id;
    std::vector<double> means;  // one per cycle position

    double mean_at(int position) const {
        if (position < 1 || position > cycle_length)
            throw domain_error("HistoricAverageModel: position out of range");
        return means[position - 1];
    }
};

// Trains the AVG baseline from (possibly sparse) sequences: per-position means
// of the observed values. Positions with no observations are filled by linear
// interpolation between their nearest observed neighbors along the cyclic
// position axis. With homogeneous = true every position gets the global mean.
inline HistoricAverageModel train_historic_average(const std::vector<ObservationSequence>& seqs,
                                                   int p, bool homogeneous = false) {
    if (seqs.empty()) throw domain_error("train_historic_average: no sequences");
    if (p < 1) throw domain_error("train_historic_average: cycle length must be >= 1");
    std::vector<double> sum(p, 0.0), cnt(p, 0.0);
    double gsum = 0.0, gcnt = 0.0;
    for (const auto& s : seqs) {
        s.validate();
        for (int k = 0; k < s.length(); ++k) {
            int v = s.values[k];
            if (v < 0) continue;
            int x = s.position_of(k, p);
            sum[x - 1] += v;
            cnt[x - 1] += 1.0;
            gsum += v;
            gcnt += 1.0;
        }
    }
    if (gcnt == 0.0) throw domain_error("train_historic_average: no observed values");

    HistoricAverageModel avg;
    avg.cycle_length = p;
    avg.cluster_id = seqs.front().cluster_id;
    avg.means.assign(p, gsum / gcnt);
    if (homogeneous) return avg;

    for (int x = 0; x < p; ++x)
        if (cnt[x] > 0.0) avg.means[x] = sum[x] / cnt[x];

    // Cyclic linear interpolation across empty positions.
    std::vector<int> observed;
    for (int x = 0; x < p; ++x)
        if (cnt[x] > 0.0) observed.push_back(x);
    if (static_cast<int>(observed.size()) < p) {
        for (int x = 0; x < p; ++x) {
            if (cnt[x] > 0.0) continue;
            auto it = std::upper_bound(observed.begin(), observed.end(), x);
            int right = it == observed.end() ? observed.front() + p : *it;
            int left = it == observed.begin() ? observed.back() - p : *(it - 1);
            double t = static_cast<double>(x - left) / (right - left);
            avg.means[x] = (1.0 - t) * avg.means[(left % p + p) % p] +
                           t * avg.means[right % p];
        }
    }
    return avg;
}

// LAST baseline: repeat the most recent observation.
inline double baseline_last(const PredictionRequest& req) {
    if (req.last_observation < 0) throw domain_error("baseline_last: missing observation");
    return static_cast<double>(req.last_observation);
}

// AVG baseline prediction for a target minute.
inline double baseline_avg(const HistoricAverageModel& avg, Timestamp target) {
    return avg.mean_at(cycle_position_of(target, avg.cycle_length));
}

// Precomputed composite transition products for a fixed set of horizons:
// composite(d, x) = A_x * A_{x+1} * ... * A_{x+d-1}. Built from power-of-two
// step tables, so the whole cache costs O((log d_max + #horizons) * p * N^3)
// and each prediction is a single vector-matrix product. Agrees with
// propagate() to floating-point tolerance; evaluation uses this, the simple
// loop remains the reference.
class CompositeCache {
public:
    CompositeCache(const CyclicMarkovModel& m, const std::vector<int>& horizons)
        : num_states_(m.num_states) {
        const int p = m.cycle_length, n = m.num_states;
        int dmax = 0;
        for (int d : horizons) {
            if (d < 1) throw domain_error("CompositeCache: horizons must be >= 1");
            dmax = std::max(dmax, d);
        }
        // pow2_[k] holds the p composites of length 2^k.
        std::vector<std::vector<double>> pow2;
        pow2.emplace_back(m.transitions);
        for (int len = 2; len <= dmax; len *= 2)
            pow2.push_back(combine(pow2.back(), pow2.back(), len / 2, p, n));
        for (int d : horizons) {
            if (tables_.count(d)) continue;
            std::vector<double> acc;
            int built = 0;
            for (int bit = 0; (1 << bit) <= d; ++bit) {
                if (!(d & (1 << bit))) continue;
                if (acc.empty()) {
                    acc = pow2[bit];
                    built = 1 << bit;
                } else {
                    acc = combine(acc, pow2[bit], built, p, n);
                    built += 1 << bit;
                }
            }
            tables_.emplace(d, std::move(acc));
        }
    }

    // Expected availability starting from a one-hot observation.
    double predict(int last_value, int start_position, int d) const {
        const int n = num_states_;
        auto it = tables_.find(d);
        if (it == tables_.end()) throw domain_error("CompositeCache: horizon not prepared");
        const double* C =
            it->second.data() + static_cast<size_t>(start_position - 1) * n * n;
        double e = 0.0;
        for (int j = 0; j < n; ++j) e += static_cast<double>(j) * C[last_value * n + j];
        return e;
    }

private:
    // out(x) = a(x) * b(x + len_a), positions wrapping mod p.
    static std::vector<double> combine(const std::vector<double>& a, const std::vector<double>& b,
                                       int len_a, int p, int n) {
        std::vector<double> out(static_cast<size_t>(p) * n * n, 0.0);
        for (int x = 0; x < p; ++x) {
            const double* A = a.data() + static_cast<size_t>(x) * n * n;
            const double* B = b.data() + static_cast<size_t>((x + len_a) % p) * n * n;
            double* O = out.data() + static_cast<size_t>(x) * n * n;
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k) {
                    double v = A[i * n + k];
                    if (v == 0.0) continue;
                    for (int j = 0; j < n; ++j) O[i * n + j] += v * B[k * n + j];
                }
        }
        return out;
    }

    int num_states_;
    std::map<int, std::vector<double>> tables_;
};

}  // namespace cymark
