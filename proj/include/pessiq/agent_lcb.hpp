#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pessiq/mdp.hpp"
#include "pessiq/sampling.hpp"

namespace pessiq {

// Shared configuration for the LCB-penalized agents. The derived quantities
// use the global sample budget T:
//   iota = log(S*T/delta),  H = ceil(4*iota/(1-gamma)).
// T is clamped to >= 1 for the derivation only, so a zero-step run (a no-op)
// still carries valid constants.
struct LcbConfig {
    std::size_t total_steps = 0;  // T
    double delta = 0.1;
    double c_b = 1.0;  // C_b; 0 disables the penalty (vanilla Q-learning)
    double discount = 0.0;

    double iota = 0.0;    // log(S*T/delta)
    std::size_t horizon_h = 0;  // H

    static LcbConfig make(std::size_t num_states, std::size_t total_steps, double delta,
                          double c_b, double discount) {
        if (!(delta > 0.0) || !(delta < 1.0))
            throw std::invalid_argument("lcb config: delta must lie in (0,1)");
        if (!(discount > 0.0) || !(discount < 1.0))
            throw std::invalid_argument("lcb config: discount must lie in (0,1)");
        if (c_b < 0.0) throw std::invalid_argument("lcb config: c_b must be nonnegative");
        LcbConfig cfg;
        cfg.total_steps = total_steps;
        cfg.delta = delta;
        cfg.c_b = c_b;
        cfg.discount = discount;
        const double t_eff = static_cast<double>(std::max<std::size_t>(total_steps, 1));
        cfg.iota = std::log(static_cast<double>(num_states) * t_eff / delta);
        cfg.horizon_h =
            static_cast<std::size_t>(std::ceil(4.0 * cfg.iota / (1.0 - discount)));
        return cfg;
    }
};

// Rescaled-linear step size (H+1)/(H+n) for the n-th visit.
inline double learning_rate(std::size_t n, std::size_t h) {
    return static_cast<double>(h + 1) / static_cast<double>(h + n);
}

// The aggregate weights eta_i^t = eta_i * prod_{j=i+1..t} (1 - eta_j) that the
// step-size recursion assigns to the i-th visit after t visits. Test-suite
// material; the agents never need the explicit vector.
inline std::vector<double> eta_weights(std::size_t t, std::size_t h) {
    if (t == 0) throw std::invalid_argument("eta_weights: t must be >= 1");
    std::vector<double> w(t);
    double tail = 1.0;  // prod_{j=i+1..t} (1 - eta_j), built from the right
    for (std::size_t i = t; i >= 1; --i) {
        const double eta = learning_rate(i, h);
        w[i - 1] = eta * tail;
        tail *= 1.0 - eta;
    }
    return w;
}

// Hoeffding-style LCB penalty b_n = C_b * sqrt(H*iota / (n*(1-gamma)^2)).
inline double hoeffding_penalty(std::size_t n, const LcbConfig& cfg) {
    return cfg.c_b * std::sqrt(static_cast<double>(cfg.horizon_h) * cfg.iota /
                               (static_cast<double>(n) * (1.0 - cfg.discount) *
                                (1.0 - cfg.discount)));
}

struct LcbState {
    SaTable<double> q;
    std::vector<double> v;
    SaTable<std::size_t> visits;
    std::size_t step = 0;
    DeterministicPolicy policy_snapshot;  // pi_t, advanced when V strictly improves

    LcbState() = default;
    LcbState(std::size_t num_states, std::size_t num_actions)
        : q(num_states, num_actions, 0.0), v(num_states, 0.0),
          visits(num_states, num_actions, 0) {
        policy_snapshot.action_of.assign(num_states, 0);
    }
};

struct StepInfo {
    std::size_t visit_count = 0;  // n after the increment
    double penalty = 0.0;         // b_n actually subtracted
};

// One asynchronous update at the observed pair: count the visit, apply the
// penalized Q-target, then the monotone V max-update at the visited state.
inline StepInfo lcb_step(LcbState& state, const Transition& tr, const LcbConfig& cfg) {
    const std::size_t s = tr.state, a = tr.action;
    const std::size_t n = ++state.visits(s, a);
    const double eta = learning_rate(n, cfg.horizon_h);
    const double b_n = hoeffding_penalty(n, cfg);

    const double target = tr.reward + cfg.discount * state.v[tr.next_state] - b_n;
    state.q(s, a) = (1.0 - eta) * state.q(s, a) + eta * target;

    const std::size_t best = argmax_action(state.q, s);
    if (state.q(s, best) > state.v[s]) {
        state.v[s] = state.q(s, best);
        state.policy_snapshot.action_of[s] = best;
    }
    ++state.step;
    return {n, b_n};
}

struct LcbResult {
    LcbState state;
    DeterministicPolicy pi_hat;
};

struct NoOpObserver {
    void operator()(const LcbState&, const Transition&, const StepInfo&) const {}
};

// Runs the LCB-penalized agent for cfg.total_steps transitions and extracts
// the greedy policy of the final Q (lowest-index ties; untouched all-zero
// rows give action 0). The observer fires after every step; tests use it to
// watch invariants without touching the hot loop.
template <typename Observer = NoOpObserver>
LcbResult run_lcb(const TabularMdp& mdp, TrajectorySampler& sampler, const LcbConfig& cfg,
                  Observer&& observe = Observer{}) {
    LcbState state(mdp.num_states, mdp.num_actions);
    for (std::size_t t = 0; t < cfg.total_steps; ++t) {
        const Transition tr = sampler.next_transition();
        const StepInfo info = lcb_step(state, tr, cfg);
        observe(state, tr, info);
    }
    DeterministicPolicy pi_hat = greedy_policy(state.q);
    return {std::move(state), std::move(pi_hat)};
}

// Optional per-run diagnostic stream: one CSV row "t,gap_estimate,max_v,penalty"
// every `thin` steps. gap_estimate = v_star_rho - <rho, V_t>, an upper bound
// on the eventual policy gap thanks to pessimism, computable online.
class StepDiagnostics {
  public:
    StepDiagnostics(std::ostream& out, std::size_t thin, std::vector<double> rho,
                    double v_star_rho)
        : out_(out), thin_(thin == 0 ? 1 : thin), rho_(std::move(rho)),
          v_star_rho_(v_star_rho) {}

    void operator()(const LcbState& state, const Transition&, const StepInfo& info) {
        if (state.step % thin_ != 0) return;
        double v_rho = 0.0;
        double max_v = 0.0;
        for (std::size_t s = 0; s < state.v.size(); ++s) {
            v_rho += rho_[s] * state.v[s];
            max_v = std::max(max_v, state.v[s]);
        }
        out_ << state.step << ',' << v_star_rho_ - v_rho << ',' << max_v << ','
             << info.penalty << '\n';
    }

  private:
    std::ostream& out_;
    std::size_t thin_;
    std::vector<double> rho_;
    double v_star_rho_;
};

}  // namespace pessiq
