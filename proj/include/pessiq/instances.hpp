#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pessiq/mdp.hpp"
#include "pessiq/mdp_io.hpp"
#include "pessiq/oracles.hpp"
#include "pessiq/rng.hpp"

namespace pessiq {

struct InstanceSpec {
    enum class Kind { file, random, near_expert, chain };
    Kind kind = Kind::chain;
    std::string path;             // file
    std::size_t num_states = 2;   // random / near_expert / chain
    std::size_t num_actions = 2;  // random / near_expert (chain is fixed at 2)
    double discount = 0.5;
    double expert_mix = 0.0;  // near_expert epsilon_b in [0,1]
    std::uint64_t seed = 0;   // random / near_expert
};

enum class RhoPreset { uniform, point, mu_star };

struct RhoSpec {
    RhoPreset preset = RhoPreset::uniform;
    std::size_t point_state = 0;
};

struct Instance {
    TabularMdp mdp;
    StochasticPolicy behavior;
    std::vector<double> rho;
    std::string descriptor;  // comma-free, safe to embed in CSV
};

namespace detail {

// Each transition row is Dirichlet(1,...,1) via normalized exponentials;
// rewards are uniform on [0,1). Draw order (all transition rows in (s,a,s')
// order, then all rewards in (s,a) order) is fixed for reproducibility.
inline TabularMdp random_mdp(std::size_t num_states, std::size_t num_actions, double discount,
                             std::uint64_t seed) {
    TabularMdp mdp;
    mdp.num_states = num_states;
    mdp.num_actions = num_actions;
    mdp.discount = discount;
    mdp.transition.assign(num_states * num_actions * num_states, 0.0);
    mdp.reward = SaTable<double>(num_states, num_actions, 0.0);

    SplitMix64 rng(seed);
    for (std::size_t s = 0; s < num_states; ++s) {
        for (std::size_t a = 0; a < num_actions; ++a) {
            double* row = mdp.row(s, a);
            double sum = 0.0;
            for (std::size_t t = 0; t < num_states; ++t) {
                row[t] = -std::log1p(-rng.next_double());
                sum += row[t];
            }
            for (std::size_t t = 0; t < num_states; ++t) row[t] /= sum;
        }
    }
    for (double& r : mdp.reward.flat()) r = rng.next_double();
    return mdp;
}

// S-state 2-action birth-death chain: action 0 steps left, action 1 steps
// right, each moving with probability 0.7 and staying put otherwise (moves
// clamp at the ends). Reward 1 at the top state, 0 elsewhere.
inline TabularMdp chain_mdp(std::size_t num_states, double discount) {
    constexpr double kMove = 0.7;
    TabularMdp mdp;
    mdp.num_states = num_states;
    mdp.num_actions = 2;
    mdp.discount = discount;
    mdp.transition.assign(num_states * 2 * num_states, 0.0);
    mdp.reward = SaTable<double>(num_states, 2, 0.0);
    for (std::size_t s = 0; s < num_states; ++s) {
        const std::size_t left = s == 0 ? 0 : s - 1;
        const std::size_t right = std::min(s + 1, num_states - 1);
        mdp.row(s, 0)[left] += kMove;
        mdp.row(s, 0)[s] += 1.0 - kMove;
        mdp.row(s, 1)[right] += kMove;
        mdp.row(s, 1)[s] += 1.0 - kMove;
        mdp.reward(s, 0) = mdp.reward(s, 1) = s + 1 == num_states ? 1.0 : 0.0;
    }
    return mdp;
}

inline TabularMdp perturb_kernel(const TabularMdp& mdp, double kappa) {
    TabularMdp out = mdp;
    const double uniform = 1.0 / static_cast<double>(mdp.num_states);
    for (double& p : out.transition) p *= 1.0 - kappa;
    for (std::size_t s = 0; s < mdp.num_states; ++s)
        for (std::size_t a = 0; a < mdp.num_actions; ++a) {
            double* row = out.row(s, a);
            for (std::size_t t = 0; t < mdp.num_states; ++t) row[t] += kappa * uniform;
        }
    return out;
}

inline StochasticPolicy mix_with_uniform(const DeterministicPolicy& expert, std::size_t num_actions,
                                         double mix) {
    if (mix == 1.0) return uniform_policy(expert.num_states(), num_actions);
    StochasticPolicy pi = as_stochastic(expert, num_actions);
    for (double& p : pi.probs.flat()) p *= 1.0 - mix;
    for (std::size_t s = 0; s < pi.num_states(); ++s)
        for (std::size_t a = 0; a < num_actions; ++a)
            pi.probs(s, a) += mix / static_cast<double>(num_actions);
    return pi;
}

inline bool chain_is_ergodic(const TabularMdp& mdp, const StochasticPolicy& behavior) {
    try {
        stationary_distribution(mdp, behavior, 1e-12, 50'000);
        return true;
    } catch (const ConvergenceError&) {
        return false;
    }
}

inline std::string sanitize_csv(std::string text) {
    for (char& c : text)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return text;
}

inline std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

}  // namespace detail

inline std::vector<double> resolve_rho(const RhoSpec& rho, const TabularMdp& mdp) {
    switch (rho.preset) {
        case RhoPreset::uniform:
            return uniform_distribution(mdp.num_states);
        case RhoPreset::point: {
            if (rho.point_state >= mdp.num_states)
                throw std::invalid_argument("rho: point state out of range");
            std::vector<double> out(mdp.num_states, 0.0);
            out[rho.point_state] = 1.0;
            return out;
        }
        case RhoPreset::mu_star: {
            const ExactSolution exact = value_iteration(mdp);
            const SaTable<double> mu =
                stationary_distribution(mdp, as_stochastic(exact.pi_star, mdp.num_actions));
            std::vector<double> out(mdp.num_states, 0.0);
            for (std::size_t s = 0; s < mdp.num_states; ++s)
                for (std::size_t a = 0; a < mdp.num_actions; ++a) out[s] += mu(s, a);
            return out;
        }
    }
    throw std::logic_error("rho: unknown preset");
}

// Builds (mdp, behavior, rho) from an instance spec, deterministically in the
// instance seed. Generated kinds must yield an ergodic behavior chain; if the
// check fails, the kernel is smoothed toward uniform with a geometrically
// growing weight for up to 8 retries. File-loaded instances are never altered
// and fail immediately instead.
inline Instance generate_instance(const InstanceSpec& spec, const RhoSpec& rho) {
    Instance inst;
    std::string label;
    const bool generated = spec.kind != InstanceSpec::Kind::file;

    TabularMdp base;
    switch (spec.kind) {
        case InstanceSpec::Kind::file:
            base = load_mdp(spec.path);
            label = "file(path=" + detail::sanitize_csv(spec.path) + ")";
            break;
        case InstanceSpec::Kind::random:
            base = detail::random_mdp(spec.num_states, spec.num_actions, spec.discount, spec.seed);
            label = "random(S=" + std::to_string(spec.num_states) +
                    ";A=" + std::to_string(spec.num_actions) +
                    ";gamma=" + detail::format_real(spec.discount) +
                    ";seed=" + std::to_string(spec.seed) + ")";
            break;
        case InstanceSpec::Kind::near_expert:
            if (spec.expert_mix < 0.0 || spec.expert_mix > 1.0)
                throw std::invalid_argument("near_expert: expert_mix must lie in [0,1]");
            base = detail::random_mdp(spec.num_states, spec.num_actions, spec.discount, spec.seed);
            label = "near_expert(S=" + std::to_string(spec.num_states) +
                    ";A=" + std::to_string(spec.num_actions) +
                    ";gamma=" + detail::format_real(spec.discount) +
                    ";mix=" + detail::format_real(spec.expert_mix) +
                    ";seed=" + std::to_string(spec.seed) + ")";
            break;
        case InstanceSpec::Kind::chain:
            base = detail::chain_mdp(spec.num_states, spec.discount);
            label = "chain(S=" + std::to_string(spec.num_states) +
                    ";gamma=" + detail::format_real(spec.discount) + ")";
            break;
    }
    validate(base);

    double kappa = 0.0;
    for (int attempt = 0; attempt <= 8; ++attempt) {
        TabularMdp candidate = kappa == 0.0 ? base : detail::perturb_kernel(base, kappa);
        StochasticPolicy behavior;
        if (spec.kind == InstanceSpec::Kind::near_expert)
            behavior = detail::mix_with_uniform(value_iteration(candidate).pi_star,
                                                candidate.num_actions, spec.expert_mix);
        else
            behavior = uniform_policy(candidate.num_states, candidate.num_actions);

        if (detail::chain_is_ergodic(candidate, behavior)) {
            inst.mdp = std::move(candidate);
            inst.behavior = std::move(behavior);
            inst.rho = resolve_rho(rho, inst.mdp);
            inst.descriptor = label;
            return inst;
        }
        if (!generated) break;
        kappa = kappa == 0.0 ? 1e-4 : kappa * 2.0;
    }
    throw std::runtime_error("generate_instance: behavior chain is not ergodic for \"" + label +
                             (generated ? "\" after 8 kernel perturbations" : "\""));
}

}  // namespace pessiq
