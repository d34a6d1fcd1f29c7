#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cymark/error.hpp"
#include "cymark/time.hpp"

namespace cymark {

// Probability vector over availability states 0..M (index = number of free
// resources). Kept as a plain vector; helpers below enforce the invariants
// where they matter.
using StateDistribution = std::vector<double>;

constexpr double kRowSumTolerance = 1e-9;
constexpr double kDefaultSmoothingFloor = 1e-6;

inline StateDistribution one_hot(int num_states, int state) {
    if (state < 0 || state >= num_states)
        throw domain_error("one_hot: state out of range");
    StateDistribution d(num_states, 0.0);
    d[state] = 1.0;
    return d;
}

inline bool is_distribution(const StateDistribution& d, double tol = kRowSumTolerance) {
    double sum = 0.0;
    for (double v : d) {
        if (!(v >= 0.0) || !std::isfinite(v)) return false;
        sum += v;
    }
    return std::fabs(sum - 1.0) <= tol;
}

// Cyclic time-inhomogeneous Markov chain over N availability states with
// period p: one N x N transition matrix per cycle position, plus a per-position
// initial state distribution. Availability counts are observed directly, so
// the observation model defaults to the identity (with missing values emitting
// probability 1 from every state); a custom row-stochastic observation matrix
// can be attached but is never learned.
struct CyclicMarkovModel {
    int num_states = 0;    // N = cluster size + 1
    int cycle_length = 0;  // p
    std::vector<double> transitions;  // p * N * N, row-major per position
    std::vector<double> initial;      // p * N
    std::optional<std::vector<double>> observation;  // N * N when overridden
    std::string cluster_id;

    CyclicMarkovModel() = default;
    CyclicMarkovModel(int n, int p)
        : num_states(n),
          cycle_length(p),
          transitions(static_cast<size_t>(p) * n * n, 0.0),
          initial(static_cast<size_t>(p) * n, 0.0) {
        if (n < 1 || p < 1)
            throw domain_error("CyclicMarkovModel: need num_states >= 1 and cycle_length >= 1");
    }

    size_t tidx(int x, int i, int j) const {
        return (static_cast<size_t>(x - 1) * num_states + i) * num_states + j;
    }

    double transition(int x, int i, int j) const { return transitions[tidx(x, i, j)]; }
    double& transition(int x, int i, int j) { return transitions[tidx(x, i, j)]; }

    std::span<const double> transition_row(int x, int i) const {
        return {transitions.data() + tidx(x, i, 0), static_cast<size_t>(num_states)};
    }
    std::span<double> transition_row(int x, int i) {
        return {transitions.data() + tidx(x, i, 0), static_cast<size_t>(num_states)};
    }
    // Contiguous N x N block for cycle position x.
    const double* transition_matrix(int x) const { return transitions.data() + tidx(x, 0, 0); }

    double initial_at(int x, int i) const {
        return initial[static_cast<size_t>(x - 1) * num_states + i];
    }
    double& initial_at(int x, int i) {
        return initial[static_cast<size_t>(x - 1) * num_states + i];
    }
    std::span<const double> initial_row(int x) const {
        return {initial.data() + static_cast<size_t>(x - 1) * num_states,
                static_cast<size_t>(num_states)};
    }
    std::span<double> initial_row(int x) {
        return {initial.data() + static_cast<size_t>(x - 1) * num_states,
                static_cast<size_t>(num_states)};
    }

    // b_j(value); negative value means missing and emits 1 from every state.
    double emission(int j, int value) const {
        if (value < 0) return 1.0;
        if (observation) return (*observation)[static_cast<size_t>(j) * num_states + value];
        return j == value ? 1.0 : 0.0;
    }
};

struct ModelViolation {
    std::string message;
    int position = 0;  // cycle position x, 0 when not tied to one
    int row = -1;      // state index i, -1 when not tied to one
};

// Structural and stochasticity checks. Returns an empty vector for a valid
// model: consistent dimensions, every transition row summing to 1 within
// tolerance with entries >= floor, every initial row a distribution, and the
// observation override (if any) row-stochastic.
inline std::vector<ModelViolation> validate_model(const CyclicMarkovModel& m,
                                                  double floor = kDefaultSmoothingFloor) {
    std::vector<ModelViolation> out;
    const int n = m.num_states, p = m.cycle_length;
    if (n < 1 || p < 1) {
        out.push_back({"num_states and cycle_length must be >= 1", 0, -1});
        return out;
    }
    if (m.transitions.size() != static_cast<size_t>(p) * n * n) {
        out.push_back({"transitions has wrong size", 0, -1});
        return out;
    }
    if (m.initial.size() != static_cast<size_t>(p) * n) {
        out.push_back({"initial has wrong size", 0, -1});
        return out;
    }
    for (int x = 1; x <= p; ++x) {
        for (int i = 0; i < n; ++i) {
            double sum = 0.0;
            bool bad_entry = false;
            for (int j = 0; j < n; ++j) {
                double a = m.transition(x, i, j);
                if (!std::isfinite(a) || a < floor) bad_entry = true;
                sum += a;
            }
            if (bad_entry)
                out.push_back({"transition entry below smoothing floor", x, i});
            if (std::fabs(sum - 1.0) > kRowSumTolerance)
                out.push_back({"transition row does not sum to 1", x, i});
        }
        double psum = 0.0;
        bool neg = false;
        for (int i = 0; i < n; ++i) {
            double v = m.initial_at(x, i);
            if (!std::isfinite(v) || v < 0.0) neg = true;
            psum += v;
        }
        if (neg) out.push_back({"initial entry negative or non-finite", x, -1});
        if (std::fabs(psum - 1.0) > kRowSumTolerance)
            out.push_back({"initial row does not sum to 1", x, -1});
    }
    if (m.observation) {
        if (m.observation->size() != static_cast<size_t>(n) * n) {
            out.push_back({"observation matrix has wrong size", 0, -1});
        } else {
            for (int i = 0; i < n; ++i) {
                double sum = 0.0;
                bool neg = false;
                for (int j = 0; j < n; ++j) {
                    double v = (*m.observation)[static_cast<size_t>(i) * n + j];
                    if (!std::isfinite(v) || v < 0.0) neg = true;
                    sum += v;
                }
                if (neg) out.push_back({"observation entry negative or non-finite", 0, i});
                if (std::fabs(sum - 1.0) > kRowSumTolerance)
                    out.push_back({"observation row does not sum to 1", 0, i});
            }
        }
    }
    return out;
}

}  // namespace cymark
