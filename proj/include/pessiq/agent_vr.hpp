#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pessiq/agent_lcb.hpp"
#include "pessiq/mdp.hpp"
#include "pessiq/sampling.hpp"

namespace pessiq {

// Epoch layout for the variance-reduced agent: K = floor(log4(3T/4)) epochs,
// the k-th spending 4^(k-1) reference samples plus 3*4^(k-1) update samples.
// Total consumption (4^(K+1)-4)/3 < T; the leftover budget stays unused.
struct EpochSchedule {
    std::size_t num_epochs = 0;  // K
    std::vector<std::size_t> ref_sizes;  // T_k^ref = 4^(k-1)
    std::vector<std::size_t> run_sizes;  // T_k = 3*4^(k-1)
    std::size_t total_budget = 0;

    std::size_t consumed() const {
        std::size_t sum = 0;
        for (std::size_t k = 0; k < num_epochs; ++k) sum += ref_sizes[k] + run_sizes[k];
        return sum;
    }
};

inline EpochSchedule build_schedule(std::size_t total) {
    // K = floor(log4(3T/4)); integer form: largest K with 4^(K+1) <= 3T.
    std::size_t k = 0;
    std::uint64_t pow4 = 16;  // 4^(k+2), the cost of admitting epoch k+1
    while (pow4 <= 3 * static_cast<std::uint64_t>(total) && pow4 <= (UINT64_MAX >> 2)) {
        ++k;
        pow4 <<= 2;
    }
    if (k == 0)
        throw std::invalid_argument(
            "build_schedule: budget too small, no epoch fits (need total >= 6)");
    EpochSchedule sched;
    sched.num_epochs = k;
    sched.total_budget = total;
    std::size_t ref = 1;
    for (std::size_t i = 0; i < k; ++i) {
        sched.ref_sizes.push_back(ref);
        sched.run_sizes.push_back(3 * ref);
        ref *= 4;
    }
    return sched;
}

// Output of the reference phase: empirical kernel, running moments of the
// reference value at observed next states, and the per-pair penalty. Unvisited
// pairs keep an all-zero kernel row and an infinite penalty sentinel.
struct ReferenceBundle {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::vector<double> p_tilde;  // row-major (s,a) -> next-state frequencies
    SaTable<double> mu_ref;
    SaTable<double> sigma_ref;
    SaTable<std::size_t> n_ref;
    SaTable<double> b_ref;
    std::vector<double> v_bar;

    std::span<const double> row(std::size_t s, std::size_t a) const {
        return {p_tilde.data() + (s * num_actions + a) * num_states, num_states};
    }
};

// Reference-phase penalty b_ref(s,a) for a pair visited n times.
inline double reference_penalty(double mu, double sigma, std::size_t n,
                                const LcbConfig& cfg) {
    const double nn = static_cast<double>(n);
    const double var = std::max(0.0, sigma - mu * mu);
    return cfg.c_b * (std::sqrt(var * cfg.iota / nn) +
                      std::pow(cfg.iota, 0.75) / ((1.0 - cfg.discount) * std::pow(nn, 0.75)) +
                      cfg.iota / ((1.0 - cfg.discount) * nn));
}

// Consumes exactly t_ref transitions and builds the reference bundle: running
// empirical rows for P and running means of v_bar(s') and v_bar(s')^2.
inline ReferenceBundle empirical_transition(TrajectorySampler& sampler, std::size_t t_ref,
                                            const std::vector<double>& v_bar,
                                            const LcbConfig& cfg) {
    if (t_ref == 0) throw std::invalid_argument("empirical_transition: t_ref must be >= 1");
    const std::size_t S = sampler.mdp().num_states;
    const std::size_t A = sampler.mdp().num_actions;
    if (v_bar.size() != S)
        throw std::invalid_argument("empirical_transition: v_bar size mismatch");

    ReferenceBundle bundle;
    bundle.num_states = S;
    bundle.num_actions = A;
    bundle.p_tilde.assign(S * A * S, 0.0);
    bundle.mu_ref = SaTable<double>(S, A, 0.0);
    bundle.sigma_ref = SaTable<double>(S, A, 0.0);
    bundle.n_ref = SaTable<std::size_t>(S, A, 0);
    bundle.b_ref = SaTable<double>(S, A, std::numeric_limits<double>::infinity());
    bundle.v_bar = v_bar;

    for (std::size_t t = 0; t < t_ref; ++t) {
        const Transition tr = sampler.next_transition();
        const std::size_t n = ++bundle.n_ref(tr.state, tr.action);
        const double inv_n = 1.0 / static_cast<double>(n);
        double* row = bundle.p_tilde.data() + (tr.state * A + tr.action) * S;
        for (std::size_t s = 0; s < S; ++s) row[s] *= (n - 1) * inv_n;
        row[tr.next_state] += inv_n;
        const double vb = v_bar[tr.next_state];
        bundle.mu_ref(tr.state, tr.action) +=
            (vb - bundle.mu_ref(tr.state, tr.action)) * inv_n;
        bundle.sigma_ref(tr.state, tr.action) +=
            (vb * vb - bundle.sigma_ref(tr.state, tr.action)) * inv_n;
    }

    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            if (const std::size_t n = bundle.n_ref(s, a); n > 0)
                bundle.b_ref(s, a) =
                    reference_penalty(bundle.mu_ref(s, a), bundle.sigma_ref(s, a), n, cfg);
    return bundle;
}

// Advantage penalty for the n-th visit. The difference quotient
// (sd_n - (1-eta_n)*sd_{n-1}) / eta_n estimates a variance increment and can
// dip below zero; it is clamped at 0 before entering the square root.
inline double adv_penalty(double sd_now, double sd_prev, double eta_n, std::size_t n,
                          const LcbConfig& cfg) {
    const double quotient = (sd_now - (1.0 - eta_n) * sd_prev) / eta_n;
    const double nn = static_cast<double>(n);
    const double h = static_cast<double>(cfg.horizon_h);
    return cfg.c_b *
           (std::sqrt(h * cfg.iota * std::max(0.0, quotient) / nn) +
            std::pow(h, 0.75) * std::pow(cfg.iota, 0.75) /
                (std::pow(nn, 0.75) * (1.0 - cfg.discount)) +
            h * cfg.iota / (nn * (1.0 - cfg.discount)));
}

struct VrEpochState {
    SaTable<double> q;
    std::vector<double> v;
    SaTable<std::size_t> visits;
    std::size_t step = 0;
    SaTable<double> mu_adv;
    SaTable<double> sigma_adv;
    SaTable<double> sd_adv_prev;
    std::size_t skipped_updates = 0;  // visits to pairs the reference phase missed

    VrEpochState() = default;
    VrEpochState(std::size_t num_states, std::size_t num_actions)
        : q(num_states, num_actions, 0.0), v(num_states, 0.0),
          visits(num_states, num_actions, 0), mu_adv(num_states, num_actions, 0.0),
          sigma_adv(num_states, num_actions, 0.0),
          sd_adv_prev(num_states, num_actions, 0.0) {}
};

struct VrEpochResult {
    VrEpochState state;
    std::size_t last_state = 0;
};

struct NoOpStepObserver {
    void operator()(const VrEpochState&, const Transition&) const {}
};

// One epoch of the variance-reduced update. Q and V restart at zero; the
// reference bundle supplies the frozen v_bar, empirical kernel, and b_ref.
// Pairs the reference phase never visited carry an infinite b_ref, so their
// Q-update is skipped (counted in skipped_updates); moment and visit updates
// still run. The observer fires after every step.
template <typename Observer = NoOpStepObserver>
VrEpochResult vr_epoch(TrajectorySampler& sampler, std::size_t t_k,
                       const ReferenceBundle& bundle, const LcbConfig& cfg,
                       Observer&& observe = Observer{}) {
    if (t_k == 0) throw std::invalid_argument("vr_epoch: t_k must be >= 1");
    const std::size_t S = bundle.num_states;
    const std::size_t A = bundle.num_actions;
    VrEpochState st(S, A);

    // gamma * <p_tilde(.|s,a), v_bar> is epoch-constant; hoist it out of the loop.
    SaTable<double> ref_dot(S, A, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            double dot = 0.0;
            const auto row = bundle.row(s, a);
            for (std::size_t x = 0; x < S; ++x) dot += row[x] * bundle.v_bar[x];
            ref_dot(s, a) = cfg.discount * dot;
        }

    std::size_t last_state = sampler.current_state();
    for (std::size_t t = 0; t < t_k; ++t) {
        const Transition tr = sampler.next_transition();
        const std::size_t s = tr.state, a = tr.action;
        const std::size_t n = ++st.visits(s, a);
        const double eta = learning_rate(n, cfg.horizon_h);

        const double advantage = st.v[tr.next_state] - bundle.v_bar[tr.next_state];
        st.mu_adv(s, a) = (1.0 - eta) * st.mu_adv(s, a) + eta * advantage;
        st.sigma_adv(s, a) = (1.0 - eta) * st.sigma_adv(s, a) + eta * advantage * advantage;
        const double sd_now = st.sigma_adv(s, a) - st.mu_adv(s, a) * st.mu_adv(s, a);

        if (std::isinf(bundle.b_ref(s, a))) {
            ++st.skipped_updates;
        } else {
            const double b = bundle.b_ref(s, a) +
                             adv_penalty(sd_now, st.sd_adv_prev(s, a), eta, n, cfg);
            const double target = tr.reward + cfg.discount * st.v[tr.next_state] -
                                  cfg.discount * bundle.v_bar[tr.next_state] +
                                  ref_dot(s, a) - b;
            st.q(s, a) = (1.0 - eta) * st.q(s, a) + eta * target;
        }
        st.sd_adv_prev(s, a) = sd_now;

        const double row_max = st.q(s, argmax_action(st.q, s));
        if (row_max > st.v[s]) st.v[s] = row_max;
        ++st.step;
        last_state = tr.next_state;
        observe(st, tr);
    }
    return {std::move(st), last_state};
}

struct VrResult {
    SaTable<double> q;
    std::vector<double> v;
    DeterministicPolicy pi_hat;
    EpochSchedule schedule;
    VrEpochState final_epoch;
};

struct NoOpEpochObserver {
    void operator()(std::size_t, const ReferenceBundle&, const VrEpochState&) const {}
};

// Optional per-epoch diagnostic stream: one CSV row
// "k,t_ref,t_run,gap_of_vbar,mean_b_ref,skipped_updates" after each epoch,
// where gap_of_vbar = v_star_rho - <rho, epoch V> and mean_b_ref averages the
// reference penalty over visited pairs.
class EpochDiagnostics {
  public:
    EpochDiagnostics(std::ostream& out, std::vector<double> rho, double v_star_rho)
        : out_(out), rho_(std::move(rho)), v_star_rho_(v_star_rho) {}

    void operator()(std::size_t k, const ReferenceBundle& bundle, const VrEpochState& state) {
        double v_rho = 0.0;
        for (std::size_t s = 0; s < state.v.size(); ++s) v_rho += rho_[s] * state.v[s];
        std::size_t t_ref = 0, visited = 0;
        double b_sum = 0.0;
        for (std::size_t s = 0; s < bundle.num_states; ++s)
            for (std::size_t a = 0; a < bundle.num_actions; ++a) {
                t_ref += bundle.n_ref(s, a);
                if (bundle.n_ref(s, a) > 0) {
                    ++visited;
                    b_sum += bundle.b_ref(s, a);
                }
            }
        out_ << k << ',' << t_ref << ',' << state.step << ',' << v_star_rho_ - v_rho << ','
             << (visited == 0 ? 0.0 : b_sum / static_cast<double>(visited)) << ','
             << state.skipped_updates << '\n';
    }

  private:
    std::ostream& out_;
    std::vector<double> rho_;
    double v_star_rho_;
};

// Full variance-reduced run: v_bar starts at zero, each epoch builds a fresh
// reference bundle and runs one vr_epoch, and the epoch's final V becomes the
// next reference. The sampler threads the trajectory continuously, so each
// phase starts from the previous phase's last state. The observer fires once
// per completed epoch with (k, bundle, epoch state).
template <typename Observer = NoOpEpochObserver>
VrResult run_vr(const TabularMdp& mdp, TrajectorySampler& sampler, const LcbConfig& cfg,
                Observer&& observe = Observer{}) {
    const EpochSchedule sched = build_schedule(cfg.total_steps);
    std::vector<double> v_bar(mdp.num_states, 0.0);
    VrEpochResult epoch;
    for (std::size_t k = 0; k < sched.num_epochs; ++k) {
        const ReferenceBundle bundle =
            empirical_transition(sampler, sched.ref_sizes[k], v_bar, cfg);
        epoch = vr_epoch(sampler, sched.run_sizes[k], bundle, cfg);
        v_bar = epoch.state.v;
        observe(k + 1, bundle, epoch.state);
    }
    VrResult result;
    result.q = epoch.state.q;
    result.v = epoch.state.v;
    result.pi_hat = greedy_policy(result.q);
    result.schedule = sched;
    result.final_epoch = std::move(epoch.state);
    return result;
}

}  // namespace pessiq
