#pragma once

// Test-side oracles and fixture builders. Everything here is implemented
// independently of the library code it checks: policy values come from a
// direct Eigen solve, optimal values from exhaustive policy enumeration, and
// random instances from the public RNG only.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pessiq/mdp.hpp"
#include "pessiq/rng.hpp"

namespace testsupport {

// Direct linear-solve evaluation of a deterministic policy.
inline std::vector<double> solve_policy_value(const pessiq::TabularMdp& mdp,
                                              const std::vector<std::size_t>& action_of) {
    const auto S = static_cast<Eigen::Index>(mdp.num_states);
    Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(S, S);
    Eigen::VectorXd r(S);
    for (Eigen::Index s = 0; s < S; ++s) {
        const double* p = mdp.row(static_cast<std::size_t>(s), action_of[s]);
        for (Eigen::Index t = 0; t < S; ++t) sys(s, t) -= mdp.discount * p[t];
        r(s) = mdp.reward(static_cast<std::size_t>(s), action_of[s]);
    }
    Eigen::VectorXd v = sys.partialPivLu().solve(r);
    return {v.data(), v.data() + S};
}

struct EnumeratedSolution {
    std::vector<double> v_star;
    pessiq::SaTable<double> q_star;
    std::vector<std::size_t> worst_policy;  // per-state argmin over policies
    std::vector<double> v_worst;
};

// Exhaustive enumeration over all A^S deterministic policies. Only viable for
// toy sizes; that is the point.
inline EnumeratedSolution enumerate_policies(const pessiq::TabularMdp& mdp) {
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    double total = std::pow(static_cast<double>(A), static_cast<double>(S));
    if (total > 300000.0) throw std::invalid_argument("enumerate_policies: instance too large");

    EnumeratedSolution out;
    out.v_star.assign(S, -1.0);
    out.v_worst.assign(S, 1e300);
    out.worst_policy.assign(S, 0);
    std::vector<std::size_t> pi(S, 0);
    std::vector<std::size_t> best_count(S, 0);
    while (true) {
        const std::vector<double> v = solve_policy_value(mdp, pi);
        for (std::size_t s = 0; s < S; ++s) {
            out.v_star[s] = std::max(out.v_star[s], v[s]);
            if (v[s] < out.v_worst[s]) {
                out.v_worst[s] = v[s];
                out.worst_policy[s] = pi[s];
            }
        }
        std::size_t digit = 0;
        while (digit < S && ++pi[digit] == A) pi[digit++] = 0;
        if (digit == S) break;
    }
    out.q_star = pessiq::SaTable<double>(S, A, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double* p = mdp.row(s, a);
            double ev = 0.0;
            for (std::size_t t = 0; t < S; ++t) ev += p[t] * out.v_star[t];
            out.q_star(s, a) = mdp.reward(s, a) + mdp.discount * ev;
        }
    return out;
}

// Stationary distribution of a row-stochastic matrix by replacing one balance
// equation with the normalization constraint and solving directly.
inline std::vector<double> solve_stationary(const std::vector<double>& chain, std::size_t n) {
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd sys(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = 0; j < N; ++j)
            sys(i, j) = chain[static_cast<std::size_t>(j) * n + static_cast<std::size_t>(i)] -
                        (i == j ? 1.0 : 0.0);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
    sys.row(N - 1).setOnes();
    rhs(N - 1) = 1.0;
    Eigen::VectorXd mu = sys.partialPivLu().solve(rhs);
    return {mu.data(), mu.data() + N};
}

// Upper critical value of the chi-square distribution via the Wilson-Hilferty
// cube approximation; z is the standard-normal quantile of the same level.
inline double chi_square_critical(std::size_t dof, double z) {
    const double k = static_cast<double>(dof);
    const double c = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * c * c * c;
}

inline constexpr double kZ999 = 3.090232306167814;  // Phi^{-1}(0.999)

// Random MDP with Dirichlet(1) rows and uniform rewards, built directly off
// the public RNG for test fixtures. Deliberately mirrors no library internals.
inline pessiq::TabularMdp random_mdp(std::size_t S, std::size_t A, double discount,
                                     std::uint64_t seed) {
    pessiq::TabularMdp mdp;
    mdp.num_states = S;
    mdp.num_actions = A;
    mdp.discount = discount;
    mdp.transition.assign(S * A * S, 0.0);
    mdp.reward = pessiq::SaTable<double>(S, A, 0.0);
    pessiq::SplitMix64 rng(seed);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            double* row = mdp.row(s, a);
            double sum = 0.0;
            for (std::size_t t = 0; t < S; ++t) {
                row[t] = -std::log1p(-rng.next_double());
                sum += row[t];
            }
            for (std::size_t t = 0; t < S; ++t) row[t] /= sum;
        }
    for (double& r : mdp.reward.flat()) r = rng.next_double();
    return mdp;
}

inline std::vector<double> random_distribution(std::size_t n, pessiq::SplitMix64& rng) {
    std::vector<double> rho(n);
    double sum = 0.0;
    for (double& x : rho) {
        x = -std::log1p(-rng.next_double());
        sum += x;
    }
    for (double& x : rho) x /= sum;
    return rho;
}

inline pessiq::DeterministicPolicy random_policy(std::size_t S, std::size_t A,
                                                 pessiq::SplitMix64& rng) {
    pessiq::DeterministicPolicy pi;
    pi.action_of.resize(S);
    for (std::size_t s = 0; s < S; ++s) pi.action_of[s] = rng.next_u64() % A;
    return pi;
}

}  // namespace testsupport
