#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "pessiq/mdp.hpp"
#include "pessiq/rng.hpp"

namespace pessiq {

struct Transition {
    std::size_t state = 0;
    std::size_t action = 0;
    std::size_t next_state = 0;
    double reward = 0.0;

    bool operator==(const Transition&) const = default;
};

enum class SamplerMode { markovian, iid };

struct SamplerConfig {
    SamplerMode mode = SamplerMode::markovian;
    std::size_t initial_state = 0;
    std::uint64_t seed = 0;
    std::size_t total = 0;  // T, informational; the stream itself is unbounded
};

// Produces the data stream the agents consume. Markovian mode walks a single
// trajectory under the behavior policy; iid mode draws (s,a) fresh from a
// supplied stationary distribution each step. Single-owner mutable state:
// move it between workers, never share it.
class TrajectorySampler {
  public:
    TrajectorySampler(TabularMdp mdp, StochasticPolicy behavior, SamplerConfig config)
        : mdp_(std::move(mdp)), behavior_(std::move(behavior)), config_(config),
          rng_(config.seed), state_(config.initial_state) {
        if (config_.mode == SamplerMode::iid)
            throw std::invalid_argument("sampler: iid mode requires a stationary distribution");
        if (config_.initial_state >= mdp_.num_states)
            throw std::invalid_argument("sampler: initial_state out of range");
    }

    TrajectorySampler(TabularMdp mdp, StochasticPolicy behavior, SamplerConfig config,
                      SaTable<double> mu_b)
        : mdp_(std::move(mdp)), behavior_(std::move(behavior)), config_(config),
          mu_b_(std::move(mu_b)), rng_(config.seed), state_(config.initial_state) {
        if (config_.mode != SamplerMode::iid)
            throw std::invalid_argument("sampler: mu_b only applies to iid mode");
        if (mu_b_.num_states() != mdp_.num_states || mu_b_.num_actions() != mdp_.num_actions)
            throw std::invalid_argument("sampler: mu_b has wrong shape");
    }

    Transition next_transition() {
        Transition tr;
        if (config_.mode == SamplerMode::markovian) {
            tr.state = state_;
            const double* row = behavior_.probs.flat().data() + tr.state * mdp_.num_actions;
            tr.action = rng_.next_index({row, mdp_.num_actions});
            tr.next_state = rng_.next_index({mdp_.row(tr.state, tr.action), mdp_.num_states});
            state_ = tr.next_state;
        } else {
            const std::size_t pair = rng_.next_index({mu_b_.flat().data(), mu_b_.size()});
            tr.state = pair / mdp_.num_actions;
            tr.action = pair % mdp_.num_actions;
            tr.next_state = rng_.next_index({mdp_.row(tr.state, tr.action), mdp_.num_states});
        }
        tr.reward = mdp_.reward(tr.state, tr.action);
        ++steps_;
        return tr;
    }

    std::vector<Transition> take(std::size_t n) {
        std::vector<Transition> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(next_transition());
        return out;
    }

    std::size_t steps() const { return steps_; }
    std::size_t current_state() const { return state_; }
    const TabularMdp& mdp() const { return mdp_; }
    const SamplerConfig& config() const { return config_; }

  private:
    TabularMdp mdp_;
    StochasticPolicy behavior_;
    SamplerConfig config_;
    SaTable<double> mu_b_;
    SplitMix64 rng_;
    std::size_t state_;
    std::size_t steps_ = 0;
};

// Debug dump, one transition per line: "t<TAB>s<TAB>a<TAB>s'<TAB>r" with t
// counting from 1. Intended for diffing trajectories across implementations.
inline void dump_trajectory_tsv(TrajectorySampler& sampler, std::size_t n, std::ostream& out) {
    for (std::size_t i = 0; i < n; ++i) {
        const Transition tr = sampler.next_transition();
        out << sampler.steps() << '\t' << tr.state << '\t' << tr.action << '\t' << tr.next_state
            << '\t' << tr.reward << '\n';
    }
}

}  // namespace pessiq
