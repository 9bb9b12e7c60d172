#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pessiq/mdp.hpp"

namespace pessiq {

// Thrown when an iterative oracle fails to reach its tolerance; carries the
// last residual so callers can report how far off it was.
class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (last residual " + std::to_string(residual) + ")"),
          residual_(residual) {}
    double residual() const { return residual_; }

  private:
    double residual_;
};

struct ExactSolution {
    std::vector<double> v_star;
    SaTable<double> q_star;
    DeterministicPolicy pi_star;
    std::size_t iterations_used = 0;
};

struct OccupancyMeasure {
    SaTable<double> d_sa;
    std::vector<double> d_s;
};

struct ChainDiagnostics {
    SaTable<double> stationary;  // mu_b over (s,a)
    double mu_min = 0.0;
    double concentrability = 0.0;  // C*, +inf when d* has mass off the chain's support
    std::size_t t_mix_quarter = 0;
};

inline constexpr double kValueIterTol = 1e-10;

// Default iteration budget: contraction at rate gamma needs about
// log(tol*(1-gamma))/log(gamma) sweeps to push the residual below tol.
inline std::size_t value_iteration_default_iters(double discount, double tol = kValueIterTol) {
    const double need = std::log(tol * (1.0 - discount)) / std::log(discount);
    return static_cast<std::size_t>(std::ceil(need)) + 64;
}

inline ExactSolution value_iteration(const TabularMdp& mdp, double tol = kValueIterTol,
                                     std::size_t max_iters = 0,
                                     std::vector<double>* residual_trace = nullptr) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    if (max_iters == 0) max_iters = value_iteration_default_iters(mdp.discount, tol);

    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    ExactSolution sol;
    sol.v_star.assign(S, 0.0);
    sol.q_star = SaTable<double>(S, A, 0.0);

    double residual = std::numeric_limits<double>::infinity();
    std::size_t iter = 0;
    for (; iter < max_iters; ++iter) {
        residual = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                const double* p = mdp.row(s, a);
                double ev = 0.0;
                for (std::size_t t = 0; t < S; ++t) ev += p[t] * sol.v_star[t];
                const double target = mdp.reward(s, a) + mdp.discount * ev;
                residual = std::max(residual, std::abs(target - sol.q_star(s, a)));
                sol.q_star(s, a) = target;
            }
        }
        for (std::size_t s = 0; s < S; ++s) sol.v_star[s] = sol.q_star(s, argmax_action(sol.q_star, s));
        if (residual_trace) residual_trace->push_back(residual);
        if (residual <= tol) break;
    }
    if (residual > tol)
        throw ConvergenceError("value_iteration: no convergence within " +
                                   std::to_string(max_iters) + " iterations",
                               residual);
    sol.iterations_used = iter + 1;
    sol.pi_star = greedy_policy(sol.q_star);
    return sol;
}

namespace detail {

// Builds P_pi (S x S) and r_pi for either policy kind.
inline void policy_kernel(const TabularMdp& mdp, const DeterministicPolicy& pi,
                          Eigen::MatrixXd& p_pi, Eigen::VectorXd& r_pi) {
    const std::size_t S = mdp.num_states;
    p_pi.resize(S, S);
    r_pi.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
        const std::size_t a = pi(s);
        const double* p = mdp.row(s, a);
        for (std::size_t t = 0; t < S; ++t) p_pi(s, t) = p[t];
        r_pi(s) = mdp.reward(s, a);
    }
}

inline void policy_kernel(const TabularMdp& mdp, const StochasticPolicy& pi,
                          Eigen::MatrixXd& p_pi, Eigen::VectorXd& r_pi) {
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    p_pi.setZero(S, S);
    r_pi.setZero(S);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const double w = pi(s, a);
            if (w == 0.0) continue;
            const double* p = mdp.row(s, a);
            for (std::size_t t = 0; t < S; ++t) p_pi(s, t) += w * p[t];
            r_pi(s) += w * mdp.reward(s, a);
        }
    }
}

}  // namespace detail

struct PolicyValue {
    std::vector<double> v_pi;
    double v_pi_rho = 0.0;
};

// Exact policy evaluation: solves (I - gamma * P_pi) v = r_pi directly.
template <typename Policy>
PolicyValue policy_evaluation(const TabularMdp& mdp, const Policy& policy,
                              const std::vector<double>& rho) {
    validate_distribution(rho, mdp.num_states, "rho");
    const auto S = static_cast<Eigen::Index>(mdp.num_states);

    Eigen::MatrixXd p_pi;
    Eigen::VectorXd r_pi;
    detail::policy_kernel(mdp, policy, p_pi, r_pi);

    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - mdp.discount * p_pi;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    Eigen::VectorXd v = lu.solve(r_pi);
    if (!v.allFinite() || (system * v - r_pi).lpNorm<Eigen::Infinity>() > 1e-8)
        throw std::runtime_error("policy_evaluation: singular linear system");

    PolicyValue out;
    out.v_pi.assign(v.data(), v.data() + S);
    for (std::size_t s = 0; s < mdp.num_states; ++s) out.v_pi_rho += rho[s] * out.v_pi[s];
    return out;
}

// Discounted state-action occupancy of a deterministic policy: the unique
// solution of d = (1-gamma) * rho_pi + gamma * d * P_pi over (s,a) pairs,
// where rho_pi places rho(s) on (s, pi(s)).
inline OccupancyMeasure occupancy(const TabularMdp& mdp, const DeterministicPolicy& policy,
                                  const std::vector<double>& rho) {
    validate_distribution(rho, mdp.num_states, "rho");
    const std::size_t S = mdp.num_states, A = mdp.num_actions;
    const auto N = static_cast<Eigen::Index>(S * A);

    // P_pi over pairs: (s,a) -> (s', pi(s')). Stored transposed for the solve
    // d^T = (1-gamma) rho_pi^T + gamma P_pi^T d^T.
    Eigen::MatrixXd chain_t = Eigen::MatrixXd::Zero(N, N);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const double* p = mdp.row(s, a);
            const auto from = static_cast<Eigen::Index>(s * A + a);
            for (std::size_t t = 0; t < S; ++t) {
                const auto to = static_cast<Eigen::Index>(t * A + policy(t));
                chain_t(to, from) += p[t];
            }
        }
    }

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
    for (std::size_t s = 0; s < S; ++s)
        rhs(static_cast<Eigen::Index>(s * A + policy(s))) = (1.0 - mdp.discount) * rho[s];

    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(N, N) - mdp.discount * chain_t;
    Eigen::VectorXd d = Eigen::PartialPivLU<Eigen::MatrixXd>(system).solve(rhs);

    OccupancyMeasure out;
    out.d_sa = SaTable<double>(S, A, 0.0);
    out.d_s.assign(S, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const double val = std::max(0.0, d(static_cast<Eigen::Index>(s * A + a)));
            out.d_sa(s, a) = val;
            out.d_s[s] += val;
        }
    }
    return out;
}

// The (s,a) -> (s',a') chain induced by a behavior policy:
// P((s',a') | (s,a)) = P(s'|s,a) * pi_b(a'|s'). Row-major SA x SA.
inline std::vector<double> behavior_chain(const TabularMdp& mdp, const StochasticPolicy& behavior) {
    const std::size_t S = mdp.num_states, A = mdp.num_actions, N = S * A;
    std::vector<double> chain(N * N, 0.0);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const double* p = mdp.row(s, a);
            double* row = chain.data() + (s * A + a) * N;
            for (std::size_t t = 0; t < S; ++t) {
                if (p[t] == 0.0) continue;
                for (std::size_t b = 0; b < A; ++b) row[t * A + b] = p[t] * behavior(t, b);
            }
        }
    }
    return chain;
}

inline constexpr std::size_t kStationaryIterCap = 1'000'000;

// Stationary distribution of the behavior chain by power iteration from the
// uniform start, stopping at ||mu - mu P||_1 <= tol.
inline SaTable<double> stationary_distribution(const TabularMdp& mdp,
                                               const StochasticPolicy& behavior,
                                               double tol = 1e-12,
                                               std::size_t iter_cap = kStationaryIterCap) {
    if (!(tol > 0.0)) throw std::invalid_argument("stationary_distribution: tol must be positive");
    const std::size_t N = mdp.num_pairs();
    const std::vector<double> chain = behavior_chain(mdp, behavior);

    std::vector<double> mu(N, 1.0 / static_cast<double>(N));
    std::vector<double> next(N, 0.0);
    double err = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < iter_cap; ++iter) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < N; ++i) {
            const double m = mu[i];
            if (m == 0.0) continue;
            const double* row = chain.data() + i * N;
            for (std::size_t j = 0; j < N; ++j) next[j] += m * row[j];
        }
        err = 0.0;
        double sum = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            err += std::abs(next[j] - mu[j]);
            sum += next[j];
        }
        for (std::size_t j = 0; j < N; ++j) next[j] /= sum;
        mu.swap(next);
        if (err <= tol) {
            SaTable<double> out(mdp.num_states, mdp.num_actions, 0.0);
            out.flat() = mu;
            return out;
        }
    }
    throw ConvergenceError(
        "stationary_distribution: power iteration exceeded cap; behavior chain "
        "does not appear uniformly ergodic",
        err);
}

struct ConcentrabilityResult {
    double value = 0.0;
    std::size_t arg_state = 0;
    std::size_t arg_action = 0;
};

// C* = max over (s,a) of d*(s,a)/mu_b(s,a), with 0/0 = 0 and x/0 = +inf for
// x > 0. The +inf sentinel flags optimal-policy mass on pairs the behavior
// chain never visits.
inline ConcentrabilityResult concentrability_argmax(const SaTable<double>& d_star,
                                                    const SaTable<double>& mu_b) {
    ConcentrabilityResult best;
    best.value = 0.0;
    for (std::size_t s = 0; s < d_star.num_states(); ++s) {
        for (std::size_t a = 0; a < d_star.num_actions(); ++a) {
            const double num = d_star(s, a);
            const double den = mu_b(s, a);
            double ratio;
            if (num == 0.0)
                ratio = 0.0;
            else if (den == 0.0)
                ratio = std::numeric_limits<double>::infinity();
            else
                ratio = num / den;
            if (ratio > best.value) {
                best.value = ratio;
                best.arg_state = s;
                best.arg_action = a;
            }
        }
    }
    return best;
}

inline double concentrability(const OccupancyMeasure& d_star, const SaTable<double>& mu_b) {
    return concentrability_argmax(d_star.d_sa, mu_b).value;
}

inline double total_variation(const double* p, const double* q, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::abs(p[i] - q[i]);
    return 0.5 * sum;
}

inline constexpr std::size_t kMixingIterCap = 10'000;

// Smallest t with max over initial pairs of TV(P^t(.|s0,a0), mu_b) <= delta,
// by exact powering of the SA x SA behavior chain. Non-ergodic chains never
// get under delta and hit the cap.
inline std::size_t mixing_time(const TabularMdp& mdp, const StochasticPolicy& behavior,
                               double delta, std::size_t iter_cap = kMixingIterCap) {
    if (!(delta > 0.0) || !(delta < 1.0))
        throw std::invalid_argument("mixing_time: delta must lie in (0,1)");
    const std::size_t N = mdp.num_pairs();
    const std::vector<double> chain = behavior_chain(mdp, behavior);
    const SaTable<double> mu = stationary_distribution(mdp, behavior);

    std::vector<double> power = chain;  // row i = P^t(.|i), t = 1
    std::vector<double> scratch(N * N, 0.0);
    for (std::size_t t = 1; t <= iter_cap; ++t) {
        double worst = 0.0;
        for (std::size_t i = 0; i < N; ++i)
            worst = std::max(worst, total_variation(power.data() + i * N, mu.flat().data(), N));
        if (worst <= delta) return t;

        std::fill(scratch.begin(), scratch.end(), 0.0);
        for (std::size_t i = 0; i < N; ++i) {
            const double* prow = power.data() + i * N;
            double* orow = scratch.data() + i * N;
            for (std::size_t k = 0; k < N; ++k) {
                const double w = prow[k];
                if (w == 0.0) continue;
                const double* crow = chain.data() + k * N;
                for (std::size_t j = 0; j < N; ++j) orow[j] += w * crow[j];
            }
        }
        power.swap(scratch);
    }
    throw ConvergenceError("mixing_time: cap exceeded; chain mixes slower than the cap allows",
                           delta);
}

// Bundles the instance diagnostics the harness reports next to every gap.
inline ChainDiagnostics make_chain_diagnostics(const TabularMdp& mdp,
                                               const StochasticPolicy& behavior,
                                               const OccupancyMeasure& d_star) {
    ChainDiagnostics diag;
    diag.stationary = stationary_distribution(mdp, behavior);
    diag.mu_min = *std::min_element(diag.stationary.flat().begin(), diag.stationary.flat().end());
    diag.concentrability = concentrability(d_star, diag.stationary);
    diag.t_mix_quarter = mixing_time(mdp, behavior, 0.25);
    return diag;
}

}  // namespace pessiq
