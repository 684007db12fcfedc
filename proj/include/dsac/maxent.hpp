#pragma once

#include <span>
#include <vector>

namespace dsac {

/// Per-state action values together with the entropy temperature used to
/// read them. Input to every policy construction below.
struct QVector {
    std::vector<double> q;
    double alpha = 1.0;
};

/// Probability vector over discrete actions.
struct PolicyDistribution {
    std::vector<double> probs;

    int size() const { return static_cast<int>(probs.size()); }
    double operator[](int i) const { return probs[static_cast<std::size_t>(i)]; }
};

enum class ConstraintKind { Mean, Variance };

/// Statistic a constrained policy must reproduce. `center` is only meaningful
/// for the variance form: the mean inside the squared deviation.
struct ConstraintTarget {
    ConstraintKind kind = ConstraintKind::Mean;
    double target = 0.0;
    double center = 0.0;
};

enum class SolveStatus { Converged, ClippedLow, ClippedHigh, Degenerate };

const char* to_string(SolveStatus status);

/// Solved multiplier, clipped to [0, 1].
struct LagrangeSolution {
    double lambda = 0.0;
    double residual = 0.0;  // final |g(lambda)|
    int iterations = 0;
    SolveStatus status = SolveStatus::Converged;
};

struct SolveOptions {
    double delta = 1e-15;             // Newton stopping tolerance on |g|
    int max_iterations = 100;
    double bisection_tol = 1e-12;     // bracket width for the fallback
    double derivative_floor = 1e-12;  // |g'| below this is degenerate
};

/// Softmax with the max-subtraction trick: no overflow for any finite input,
/// underflow yields exact zeros.
PolicyDistribution stable_softmax(std::span<const double> logits);

/// Boltzmann policy over Q scaled by the temperature: probs ∝ exp(q/alpha).
PolicyDistribution surrogate_policy(const QVector& qv);

/// probs ∝ exp((1 - lambda1) * q / alpha). lambda1 must already be in [0, 1].
PolicyDistribution mean_constrained_policy(const QVector& qv, double lambda1);

/// probs ∝ exp((q - lambda2 * (q - center)^2) / alpha).
PolicyDistribution variance_constrained_policy(const QVector& qv, double lambda2, double center);

/// Σ_i pi[i] * q[i].
double expected_mean(const PolicyDistribution& pi, const QVector& qv);

/// Σ_i pi[i] * (q[i] - center)^2.
double expected_variance(const PolicyDistribution& pi, const QVector& qv, double center);

/// Shannon entropy in nats. Zero-probability entries contribute exactly 0.
double policy_entropy(const PolicyDistribution& pi);

/// Constraint residual g(lambda): constrained-policy statistic minus target.
double g_residual(const QVector& qv, double lambda, const ConstraintTarget& ct);

/// Analytic derivative of g. Mean form: -(1/alpha) * Var_pi[q]. Variance
/// form: -(1/alpha) * (E_pi[(q-c)^4] - E_pi[(q-c)^2]^2), the fourth-moment
/// expression the source derivation labels "Kurtosis".
double g_derivative(const QVector& qv, double lambda, const ConstraintTarget& ct);

/// Newton-Raphson from lambda0 = 0 with sign-analysis clipping and a
/// bisection fallback; the returned multiplier always lies in [0, 1].
LagrangeSolution solve_lambda(const QVector& qv, const ConstraintTarget& ct,
                              const SolveOptions& options = {});

}  // namespace dsac
