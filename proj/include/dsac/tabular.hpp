#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dsac {

/// Exact finite MDP: transition tensor, reward table, terminal set and
/// initial-state distribution. Ground truth for the toy environments.
struct TabularMDP {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> transition;  // [s][a][s'] row-major
    std::vector<double> reward;      // [s][a]
    std::vector<std::uint8_t> terminal;
    std::vector<double> initial;

    double t(int s, int a, int s2) const {
        return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    double& t(int s, int a, int s2) {
        return transition[(static_cast<std::size_t>(s) * n_actions + a) * n_states + s2];
    }
    double r(int s, int a) const { return reward[static_cast<std::size_t>(s) * n_actions + a]; }
    double& r(int s, int a) { return reward[static_cast<std::size_t>(s) * n_actions + a]; }

    void validate() const;
};

TabularMDP make_tabular(int n_states, int n_actions);

/// Entropy-regularized fixed point: Q, the softmax(Q/alpha) policy, and V.
struct SoftPlan {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> q;       // [s][a]
    std::vector<double> policy;  // [s][a]
    std::vector<double> v;       // [s]
    int iterations = 0;
};

/// Iterate Q(s,a) <- R(s,a) + gamma * Sum_s' T * V(s') with
/// V(s) = alpha * log Sum_a exp(Q(s,a)/alpha) until the sup-norm change
/// drops below tol. Terminal states keep V = 0.
SoftPlan soft_value_iteration(const TabularMDP& mdp, double alpha, double gamma, double tol,
                              int max_iterations = 200000);

/// One more backup applied to an existing Q table; returns the sup-norm change.
double soft_backup_delta(const TabularMDP& mdp, const SoftPlan& plan, double alpha, double gamma);

/// Deterministic argmax policy from a plan, ties to the lowest index.
std::vector<double> greedy_policy(const SoftPlan& plan);

/// Exact expected undiscounted return of a fixed policy over a finite
/// horizon, from the initial distribution. Terminal states absorb.
double expected_policy_return(const TabularMDP& mdp, std::span<const double> policy, int horizon);

}  // namespace dsac
