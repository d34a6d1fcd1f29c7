#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "cymark/estimation.hpp"
#include "cymark/model.hpp"
#include "cymark/sequence.hpp"

namespace cymark {

// Forward-backward tables for one sequence, computed with per-step
// normalization (Rabiner scaling). The scaled variables stay in [0, 1] for
// arbitrary sequence lengths; log-space views are reconstructed from the
// per-step scaling terms on demand, so nothing underflows even at T >= 1e5.
//
//   alpha_scaled[t][i] = alpha_t(i) / prod_{u <= t} c_u
//   beta_scaled[t][i]  = beta_t(i)  / prod_{u > t}  c_u
//   gamma_t(i)         = alpha_scaled[t][i] * beta_scaled[t][i]   (sums to 1)
struct ForwardBackwardTables {
    int length = 0;
    int num_states = 0;
    std::vector<double> alpha_scaled;   // T * N
    std::vector<double> beta_scaled;    // T * N
    std::vector<double> log_scale;      // T entries: log c_t
    std::vector<double> cum_log_scale;  // prefix sums of log_scale
    double log_likelihood = 0.0;

    double alpha_hat(int t, int i) const {
        return alpha_scaled[static_cast<size_t>(t) * num_states + i];
    }
    double beta_hat(int t, int i) const {
        return beta_scaled[static_cast<size_t>(t) * num_states + i];
    }
    double log_alpha(int t, int i) const {
        return std::log(alpha_hat(t, i)) + cum_log_scale[t];
    }
    double log_beta(int t, int i) const {
        return std::log(beta_hat(t, i)) + (cum_log_scale[length - 1] - cum_log_scale[t]);
    }
    double gamma(int t, int i) const { return alpha_hat(t, i) * beta_hat(t, i); }
};

// Runs the forward-backward recursions of the cyclic model over one sequence.
// Missing values emit probability 1 from every state, so gaps contribute pure
// transition structure. Throws domain_error if some observation has zero
// probability under the model (impossible with floored transitions and the
// identity observation model).
inline ForwardBackwardTables forward_backward(const CyclicMarkovModel& m,
                                              const ObservationSequence& seq) {
    seq.validate();
    if (seq.cluster_size != m.num_states - 1)
        throw domain_error("forward_backward: sequence cluster_size incompatible with model");
    const int n = m.num_states, p = m.cycle_length, T = seq.length();

    ForwardBackwardTables tb;
    tb.length = T;
    tb.num_states = n;
    tb.alpha_scaled.assign(static_cast<size_t>(T) * n, 0.0);
    tb.beta_scaled.assign(static_cast<size_t>(T) * n, 0.0);
    tb.log_scale.assign(T, 0.0);
    tb.cum_log_scale.assign(T, 0.0);

    std::vector<int> pos(T);
    for (int k = 0; k < T; ++k) pos[k] = seq.position_of(k, p);

    double* a = tb.alpha_scaled.data();
    {
        double c = 0.0;
        for (int j = 0; j < n; ++j) {
            a[j] = m.initial_at(pos[0], j) * m.emission(j, seq.values[0]);
            c += a[j];
        }
        if (c <= 0.0) throw domain_error("forward_backward: impossible first observation");
        for (int j = 0; j < n; ++j) a[j] /= c;
        tb.log_scale[0] = std::log(c);
        tb.cum_log_scale[0] = tb.log_scale[0];
    }
    for (int k = 1; k < T; ++k) {
        const double* prev = a + static_cast<size_t>(k - 1) * n;
        double* cur = a + static_cast<size_t>(k) * n;
        const double* A = m.transition_matrix(pos[k - 1]);
        double c = 0.0;
        for (int j = 0; j < n; ++j) {
            double e = m.emission(j, seq.values[k]);
            double s = 0.0;
            if (e != 0.0)
                for (int i = 0; i < n; ++i) s += prev[i] * A[i * n + j];
            cur[j] = s * e;
            c += cur[j];
        }
        if (c <= 0.0)
            throw domain_error("forward_backward: zero-probability observation at step " +
                               std::to_string(k));
        for (int j = 0; j < n; ++j) cur[j] /= c;
        tb.log_scale[k] = std::log(c);
        tb.cum_log_scale[k] = tb.cum_log_scale[k - 1] + tb.log_scale[k];
    }
    tb.log_likelihood = tb.cum_log_scale[T - 1];

    double* b = tb.beta_scaled.data();
    for (int j = 0; j < n; ++j) b[static_cast<size_t>(T - 1) * n + j] = 1.0;
    for (int k = T - 2; k >= 0; --k) {
        const double* nxt = b + static_cast<size_t>(k + 1) * n;
        double* cur = b + static_cast<size_t>(k) * n;
        const double* A = m.transition_matrix(pos[k]);
        double inv_c = std::exp(-tb.log_scale[k + 1]);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j)
                s += A[i * n + j] * m.emission(j, seq.values[k + 1]) * nxt[j];
            cur[i] = s * inv_c;
        }
    }
    return tb;
}

struct BaumWelchStep {
    std::vector<double> transitions;  // p * N * N
    double log_likelihood = 0.0;      // of the model the step was computed from
};

// One expectation-maximization step of the cycle-position-indexed Baum-Welch
// variant: expected transition counts xi_t(i,j) and occupancies gamma_t(i) are
// pooled per cycle position (or globally with cfg.homogeneous) and
// renormalized. Rows whose expected occupancy is zero keep the current row.
// The initial distributions are left untouched.
inline BaumWelchStep bw_update(const CyclicMarkovModel& m,
                               const std::vector<ObservationSequence>& seqs,
                               const TrainingConfig& cfg = {}) {
    const int n = m.num_states, p = m.cycle_length;
    detail::check_training_input(seqs, p, n);
    cfg.validate(n);

    std::vector<double> num(static_cast<size_t>(p) * n * n, 0.0);
    std::vector<double> den(static_cast<size_t>(p) * n, 0.0);
    double loglik = 0.0;

    std::vector<double> eb(n);
    for (const auto& seq : seqs) {
        auto tb = forward_backward(m, seq);
        loglik += tb.log_likelihood;
        const int T = seq.length();
        for (int k = 0; k + 1 < T; ++k) {
            int x = seq.position_of(k, p);
            const double* A = m.transition_matrix(x);
            double* nrow = num.data() + static_cast<size_t>(x - 1) * n * n;
            double* drow = den.data() + static_cast<size_t>(x - 1) * n;
            double inv_c = std::exp(-tb.log_scale[k + 1]);
            for (int j = 0; j < n; ++j)
                eb[j] = m.emission(j, seq.values[k + 1]) * tb.beta_hat(k + 1, j) * inv_c;
            for (int i = 0; i < n; ++i) {
                double ai = tb.alpha_hat(k, i);
                if (ai == 0.0) continue;
                drow[i] += ai * tb.beta_hat(k, i);
                for (int j = 0; j < n; ++j) nrow[i * n + j] += ai * A[i * n + j] * eb[j];
            }
        }
    }

    if (cfg.homogeneous) {
        std::vector<double> pn(static_cast<size_t>(n) * n, 0.0), pd(n, 0.0);
        for (int x = 0; x < p; ++x) {
            for (int ij = 0; ij < n * n; ++ij) pn[ij] += num[static_cast<size_t>(x) * n * n + ij];
            for (int i = 0; i < n; ++i) pd[i] += den[static_cast<size_t>(x) * n + i];
        }
        for (int x = 0; x < p; ++x) {
            std::copy(pn.begin(), pn.end(), num.begin() + static_cast<size_t>(x) * n * n);
            std::copy(pd.begin(), pd.end(), den.begin() + static_cast<size_t>(x) * n);
        }
    }

    BaumWelchStep step;
    step.log_likelihood = loglik;
    step.transitions.assign(static_cast<size_t>(p) * n * n, 0.0);
    for (int x = 1; x <= p; ++x) {
        for (int i = 0; i < n; ++i) {
            double d = den[static_cast<size_t>(x - 1) * n + i];
            double* out = step.transitions.data() + (static_cast<size_t>(x - 1) * n + i) * n;
            if (d > 0.0) {
                std::span<const double> row{num.data() + (static_cast<size_t>(x - 1) * n + i) * n,
                                            static_cast<size_t>(n)};
                floor_row(row, {out, static_cast<size_t>(n)}, cfg.smoothing_floor);
            } else {
                auto cur = m.transition_row(x, i);
                std::copy(cur.begin(), cur.end(), out);
            }
        }
    }
    return step;
}

struct BaumWelchResult {
    CyclicMarkovModel model;
    std::vector<double> log_likelihood_trace;  // one entry per iteration, pre-update
    bool converged = false;
    int iterations = 0;
};

// Full Baum-Welch training loop. Starts from the near-identity init model
// (initial distributions estimated from the observed values and then held
// fixed) or from a caller-supplied warm start, and iterates until the largest
// transition-entry change drops below cfg.epsilon_convergence or the
// iteration budget runs out; `converged` distinguishes the two.
inline BaumWelchResult train_baum_welch(const std::vector<ObservationSequence>& seqs, int p,
                                        int num_states, const TrainingConfig& cfg = {},
                                        const std::optional<CyclicMarkovModel>& warm_start = {}) {
    detail::check_training_input(seqs, p, num_states);
    cfg.validate(num_states);

    BaumWelchResult res;
    if (warm_start) {
        if (warm_start->num_states != num_states || warm_start->cycle_length != p)
            throw domain_error("train_baum_welch: warm start has incompatible dimensions");
        if (!validate_model(*warm_start, cfg.smoothing_floor).empty())
            throw domain_error("train_baum_welch: warm start fails validation");
        res.model = *warm_start;
    } else {
        res.model = make_initial_model(p, num_states, cfg);
        estimate_initial_distribution(seqs, res.model, cfg.smoothing_floor);
    }
    res.model.cluster_id = seqs.front().cluster_id;

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        auto step = bw_update(res.model, seqs, cfg);
        res.log_likelihood_trace.push_back(step.log_likelihood);
        double delta = 0.0;
        for (size_t k = 0; k < step.transitions.size(); ++k)
            delta = std::max(delta, std::fabs(step.transitions[k] - res.model.transitions[k]));
        res.model.transitions = std::move(step.transitions);
        res.iterations = it;
        if (delta < cfg.epsilon_convergence) {
            res.converged = true;
            break;
        }
    }
    return res;
}

// Total log-likelihood of a sequence set under a model.
inline double log_likelihood(const CyclicMarkovModel& m,
                             const std::vector<ObservationSequence>& seqs) {
    double s = 0.0;
    for (const auto& q : seqs) s += forward_backward(m, q).log_likelihood;
    return s;
}

}  // namespace cymark
