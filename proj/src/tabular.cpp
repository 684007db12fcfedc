#include "dsac/tabular.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dsac/errors.hpp"
#include "dsac/maxent.hpp"

namespace dsac {

void TabularMDP::validate() const {
    if (n_states < 1 || n_actions < 1) throw UsageError("TabularMDP: empty state or action space");
    const std::size_t ns = static_cast<std::size_t>(n_states);
    const std::size_t na = static_cast<std::size_t>(n_actions);
    if (transition.size() != ns * na * ns) throw UsageError("TabularMDP: transition tensor shape mismatch");
    if (reward.size() != ns * na) throw UsageError("TabularMDP: reward table shape mismatch");
    if (terminal.size() != ns) throw UsageError("TabularMDP: terminal set shape mismatch");
    if (initial.size() != ns) throw UsageError("TabularMDP: initial distribution shape mismatch");
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            double row = 0.0;
            for (int s2 = 0; s2 < n_states; ++s2) {
                double p = t(s, a, s2);
                if (!(p >= 0.0)) throw UsageError("TabularMDP: negative transition probability");
                row += p;
            }
            if (std::abs(row - 1.0) > 1e-12) {
                std::ostringstream msg;
                msg << "TabularMDP: T[" << s << "][" << a << "] sums to " << row;
                throw UsageError(msg.str());
            }
            if (!std::isfinite(r(s, a))) throw UsageError("TabularMDP: non-finite reward");
        }
    }
    double init = 0.0;
    for (double p : initial) {
        if (!(p >= 0.0)) throw UsageError("TabularMDP: negative initial probability");
        init += p;
    }
    if (std::abs(init - 1.0) > 1e-12) throw UsageError("TabularMDP: initial distribution does not sum to 1");
}

TabularMDP make_tabular(int n_states, int n_actions) {
    if (n_states < 1 || n_actions < 1) throw UsageError("make_tabular: empty state or action space");
    TabularMDP mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    const std::size_t ns = static_cast<std::size_t>(n_states);
    const std::size_t na = static_cast<std::size_t>(n_actions);
    mdp.transition.assign(ns * na * ns, 0.0);
    mdp.reward.assign(ns * na, 0.0);
    mdp.terminal.assign(ns, 0);
    mdp.initial.assign(ns, 0.0);
    return mdp;
}

namespace {

double soft_state_value_from_q(std::span<const double> q_row, double alpha) {
    // alpha * logsumexp(q / alpha), computed shift-stable
    double top = -std::numeric_limits<double>::infinity();
    for (double q : q_row) top = std::max(top, q);
    double acc = 0.0;
    for (double q : q_row) acc += std::exp((q - top) / alpha);
    return top + alpha * std::log(acc);
}

void backup(const TabularMDP& mdp, double alpha, double gamma,
            const std::vector<double>& q_in, std::vector<double>& q_out) {
    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    std::vector<double> v(static_cast<std::size_t>(S), 0.0);
    for (int s = 0; s < S; ++s) {
        if (mdp.terminal[static_cast<std::size_t>(s)]) continue;
        v[static_cast<std::size_t>(s)] = soft_state_value_from_q(
            std::span<const double>(q_in.data() + static_cast<std::size_t>(s) * A, static_cast<std::size_t>(A)), alpha);
    }
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double acc = 0.0;
            if (!mdp.terminal[static_cast<std::size_t>(s)]) {
                acc = mdp.r(s, a);
                for (int s2 = 0; s2 < S; ++s2) {
                    double p = mdp.t(s, a, s2);
                    if (p > 0.0) acc += gamma * p * v[static_cast<std::size_t>(s2)];
                }
            }
            q_out[static_cast<std::size_t>(s) * A + a] = acc;
        }
    }
}

}  // namespace

SoftPlan soft_value_iteration(const TabularMDP& mdp, double alpha, double gamma, double tol,
                              int max_iterations) {
    mdp.validate();
    if (!(alpha > 0.0)) throw UsageError("soft_value_iteration: alpha must be > 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw UsageError("soft_value_iteration: gamma must lie in [0, 1]");
    if (!(tol > 0.0)) throw UsageError("soft_value_iteration: tol must be > 0");

    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    SoftPlan plan;
    plan.n_states = S;
    plan.n_actions = A;
    plan.q.assign(static_cast<std::size_t>(S) * A, 0.0);

    std::vector<double> next(plan.q.size(), 0.0);
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        backup(mdp, alpha, gamma, plan.q, next);
        double delta = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            delta = std::max(delta, std::abs(next[i] - plan.q[i]));
        }
        plan.q.swap(next);
        if (delta < tol) break;
    }
    if (iter >= max_iterations) {
        throw NumericalError("soft_value_iteration: no convergence within the iteration cap");
    }
    plan.iterations = iter + 1;

    plan.v.assign(static_cast<std::size_t>(S), 0.0);
    plan.policy.assign(static_cast<std::size_t>(S) * A, 0.0);
    for (int s = 0; s < S; ++s) {
        std::span<const double> row(plan.q.data() + static_cast<std::size_t>(s) * A, static_cast<std::size_t>(A));
        if (!mdp.terminal[static_cast<std::size_t>(s)]) {
            plan.v[static_cast<std::size_t>(s)] = soft_state_value_from_q(row, alpha);
        }
        PolicyDistribution pi = surrogate_policy({std::vector<double>(row.begin(), row.end()), alpha});
        for (int a = 0; a < A; ++a) plan.policy[static_cast<std::size_t>(s) * A + a] = pi[a];
    }
    return plan;
}

double soft_backup_delta(const TabularMDP& mdp, const SoftPlan& plan, double alpha, double gamma) {
    std::vector<double> next(plan.q.size(), 0.0);
    backup(mdp, alpha, gamma, plan.q, next);
    double delta = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
        delta = std::max(delta, std::abs(next[i] - plan.q[i]));
    }
    return delta;
}

std::vector<double> greedy_policy(const SoftPlan& plan) {
    std::vector<double> policy(plan.q.size(), 0.0);
    for (int s = 0; s < plan.n_states; ++s) {
        int best = 0;
        for (int a = 1; a < plan.n_actions; ++a) {
            if (plan.q[static_cast<std::size_t>(s) * plan.n_actions + a] >
                plan.q[static_cast<std::size_t>(s) * plan.n_actions + best]) {
                best = a;
            }
        }
        policy[static_cast<std::size_t>(s) * plan.n_actions + best] = 1.0;
    }
    return policy;
}

double expected_policy_return(const TabularMDP& mdp, std::span<const double> policy, int horizon) {
    mdp.validate();
    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    if (policy.size() != static_cast<std::size_t>(S) * static_cast<std::size_t>(A)) {
        throw UsageError("expected_policy_return: policy shape mismatch");
    }
    if (horizon < 0) throw UsageError("expected_policy_return: horizon must be >= 0");

    // u[s] = expected remaining reward with k steps left; backward induction
    std::vector<double> u(static_cast<std::size_t>(S), 0.0);
    std::vector<double> u_next(static_cast<std::size_t>(S), 0.0);
    for (int k = 0; k < horizon; ++k) {
        for (int s = 0; s < S; ++s) {
            double acc = 0.0;
            if (!mdp.terminal[static_cast<std::size_t>(s)]) {
                for (int a = 0; a < A; ++a) {
                    double pa = policy[static_cast<std::size_t>(s) * A + a];
                    if (pa == 0.0) continue;
                    double inner = mdp.r(s, a);
                    for (int s2 = 0; s2 < S; ++s2) {
                        double p = mdp.t(s, a, s2);
                        if (p > 0.0) inner += p * u[static_cast<std::size_t>(s2)];
                    }
                    acc += pa * inner;
                }
            }
            u_next[static_cast<std::size_t>(s)] = acc;
        }
        u.swap(u_next);
    }
    double total = 0.0;
    for (int s = 0; s < S; ++s) total += mdp.initial[static_cast<std::size_t>(s)] * u[static_cast<std::size_t>(s)];
    return total;
}

}  // namespace dsac
