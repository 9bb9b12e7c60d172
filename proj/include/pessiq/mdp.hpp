#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pessiq {

// Row-major (state, action) table. Index arithmetic lives here so the rest of
// the library never hand-rolls s * A + a.
template <typename T>
class SaTable {
  public:
    SaTable() = default;
    SaTable(std::size_t num_states, std::size_t num_actions, T fill = T{})
        : num_states_(num_states), num_actions_(num_actions),
          data_(num_states * num_actions, fill) {}

    T& operator()(std::size_t s, std::size_t a) { return data_[s * num_actions_ + a]; }
    const T& operator()(std::size_t s, std::size_t a) const { return data_[s * num_actions_ + a]; }

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    std::size_t size() const { return data_.size(); }

    std::vector<T>& flat() { return data_; }
    const std::vector<T>& flat() const { return data_; }

  private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<T> data_;
};

// Finite discounted MDP with deterministic rewards in [0,1].
// transition is indexed [(s * A + a) * S + s']; reward is an S x A table.
struct TabularMdp {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    double discount = 0.0;
    std::vector<double> transition;  // row-major S*A rows of length S
    SaTable<double> reward;

    const double* row(std::size_t s, std::size_t a) const {
        return transition.data() + (s * num_actions + a) * num_states;
    }
    double* row(std::size_t s, std::size_t a) {
        return transition.data() + (s * num_actions + a) * num_states;
    }
    double prob(std::size_t s, std::size_t a, std::size_t next) const {
        return transition[(s * num_actions + a) * num_states + next];
    }
    std::size_t num_pairs() const { return num_states * num_actions; }
    double horizon() const { return 1.0 / (1.0 - discount); }
};

inline constexpr double kRowSumTol = 1e-12;

// Validates the TabularMdp invariants; throws std::invalid_argument naming the
// offending field and indices.
inline void validate(const TabularMdp& mdp) {
    if (mdp.num_states == 0) throw std::invalid_argument("mdp: num_states must be positive");
    if (mdp.num_actions == 0) throw std::invalid_argument("mdp: num_actions must be positive");
    if (!(mdp.discount > 0.0) || !(mdp.discount < 1.0))
        throw std::invalid_argument("mdp: discount must lie in (0,1), got " +
                                    std::to_string(mdp.discount));
    if (mdp.transition.size() != mdp.num_pairs() * mdp.num_states)
        throw std::invalid_argument("mdp: transition has wrong size");
    if (mdp.reward.num_states() != mdp.num_states || mdp.reward.num_actions() != mdp.num_actions)
        throw std::invalid_argument("mdp: reward has wrong shape");
    for (std::size_t s = 0; s < mdp.num_states; ++s) {
        for (std::size_t a = 0; a < mdp.num_actions; ++a) {
            const double* p = mdp.row(s, a);
            double sum = 0.0;
            for (std::size_t t = 0; t < mdp.num_states; ++t) {
                if (p[t] < 0.0)
                    throw std::invalid_argument("mdp: negative transition probability at (s=" +
                                                std::to_string(s) + ", a=" + std::to_string(a) +
                                                ", s'=" + std::to_string(t) + ")");
                sum += p[t];
            }
            if (std::abs(sum - 1.0) > kRowSumTol)
                throw std::invalid_argument("mdp: transition row (s=" + std::to_string(s) +
                                            ", a=" + std::to_string(a) + ") sums to " +
                                            std::to_string(sum));
            const double r = mdp.reward(s, a);
            if (!(r >= 0.0) || !(r <= 1.0))
                throw std::invalid_argument("mdp: reward out of [0,1] at (s=" + std::to_string(s) +
                                            ", a=" + std::to_string(a) + "): " + std::to_string(r));
        }
    }
}

// pi(s) -> a, total on all states.
struct DeterministicPolicy {
    std::vector<std::size_t> action_of;

    std::size_t operator()(std::size_t s) const { return action_of[s]; }
    std::size_t num_states() const { return action_of.size(); }

    bool operator==(const DeterministicPolicy&) const = default;
};

inline void validate(const DeterministicPolicy& pi, const TabularMdp& mdp) {
    if (pi.action_of.size() != mdp.num_states)
        throw std::invalid_argument("policy: must be total on all states");
    for (std::size_t s = 0; s < pi.action_of.size(); ++s)
        if (pi.action_of[s] >= mdp.num_actions)
            throw std::invalid_argument("policy: action index out of range at state " +
                                        std::to_string(s));
}

// pi(.|s), one distribution over actions per state.
struct StochasticPolicy {
    SaTable<double> probs;

    double operator()(std::size_t s, std::size_t a) const { return probs(s, a); }
    std::size_t num_states() const { return probs.num_states(); }
    std::size_t num_actions() const { return probs.num_actions(); }
};

inline void validate(const StochasticPolicy& pi, const TabularMdp& mdp) {
    if (pi.num_states() != mdp.num_states || pi.num_actions() != mdp.num_actions)
        throw std::invalid_argument("stochastic policy: wrong shape");
    for (std::size_t s = 0; s < pi.num_states(); ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < pi.num_actions(); ++a) {
            if (pi(s, a) < 0.0)
                throw std::invalid_argument("stochastic policy: negative probability at (s=" +
                                            std::to_string(s) + ", a=" + std::to_string(a) + ")");
            sum += pi(s, a);
        }
        if (std::abs(sum - 1.0) > kRowSumTol)
            throw std::invalid_argument("stochastic policy: row for state " + std::to_string(s) +
                                        " sums to " + std::to_string(sum));
    }
}

inline StochasticPolicy uniform_policy(std::size_t num_states, std::size_t num_actions) {
    StochasticPolicy pi;
    pi.probs = SaTable<double>(num_states, num_actions, 1.0 / static_cast<double>(num_actions));
    return pi;
}

inline StochasticPolicy as_stochastic(const DeterministicPolicy& pi, std::size_t num_actions) {
    StochasticPolicy out;
    out.probs = SaTable<double>(pi.num_states(), num_actions, 0.0);
    for (std::size_t s = 0; s < pi.num_states(); ++s) out.probs(s, pi(s)) = 1.0;
    return out;
}

// Greedy action with lowest-index tie-breaking; an all-zero (or any constant)
// row yields action 0.
inline std::size_t argmax_action(const SaTable<double>& q, std::size_t s) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.num_actions(); ++a)
        if (q(s, a) > q(s, best)) best = a;
    return best;
}

inline DeterministicPolicy greedy_policy(const SaTable<double>& q) {
    DeterministicPolicy pi;
    pi.action_of.resize(q.num_states());
    for (std::size_t s = 0; s < q.num_states(); ++s) pi.action_of[s] = argmax_action(q, s);
    return pi;
}

inline std::vector<double> uniform_distribution(std::size_t n) {
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

inline void validate_distribution(const std::vector<double>& rho, std::size_t n,
                                  const std::string& name) {
    if (rho.size() != n) throw std::invalid_argument(name + ": wrong length");
    double sum = 0.0;
    for (double x : rho) {
        if (x < 0.0) throw std::invalid_argument(name + ": negative entry");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(name + ": sums to " + std::to_string(sum));
}

}  // namespace pessiq
