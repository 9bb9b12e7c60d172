#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pessiq/mdp.hpp"
#include "pessiq/oracles.hpp"

namespace pessiq {

// One evaluated run: the suboptimality gap V*(rho) - V^pi(rho) next to the
// instance diagnostics that contextualize it.
struct GapReport {
    double v_star_rho = 0.0;
    double v_pihat_rho = 0.0;
    double gap = 0.0;
    double c_star = 0.0;
    double mu_min = 0.0;
    std::size_t t_mix = 0;
    std::uint64_t seed = 0;
    std::size_t total_samples = 0;
};

struct RunMeta {
    std::uint64_t seed = 0;
    std::size_t total_samples = 0;
};

inline constexpr double kGapSlack = 1e-8;

// Scores a learned policy against the exact solution. The gap comes from an
// exact linear solve, never from rollouts. A gap outside
// [-1e-8, 1/(1-gamma) + 1e-8] means the inputs are inconsistent (wrong mdp or
// stale oracle), so it throws rather than report nonsense.
inline GapReport evaluate_policy(const TabularMdp& mdp, const DeterministicPolicy& pi_hat,
                                 const std::vector<double>& rho, const ExactSolution& exact,
                                 const ChainDiagnostics& diag, const RunMeta& meta) {
    validate(pi_hat, mdp);
    GapReport report;
    for (std::size_t s = 0; s < mdp.num_states; ++s)
        report.v_star_rho += rho[s] * exact.v_star[s];
    report.v_pihat_rho = policy_evaluation(mdp, pi_hat, rho).v_pi_rho;
    report.gap = report.v_star_rho - report.v_pihat_rho;
    if (report.gap < -kGapSlack || report.gap > mdp.horizon() + kGapSlack)
        throw std::logic_error("evaluate_policy: gap " + std::to_string(report.gap) +
                               " outside [0, 1/(1-gamma)]; oracle and policy disagree on "
                               "the instance");
    report.c_star = diag.concentrability;
    report.mu_min = diag.mu_min;
    report.t_mix = diag.t_mix_quarter;
    report.seed = meta.seed;
    report.total_samples = meta.total_samples;
    return report;
}

}  // namespace pessiq
