#include "dsac/maxent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dsac/errors.hpp"

namespace dsac {
namespace {

void validate_q_vector(const QVector& qv) {
    if (qv.q.empty()) throw UsageError("QVector: empty action-value vector");
    for (double v : qv.q) {
        if (!std::isfinite(v)) throw UsageError("QVector: non-finite action value");
    }
    if (!(qv.alpha > 0.0) || !std::isfinite(qv.alpha)) {
        throw UsageError("QVector: temperature must be positive and finite");
    }
}

void validate_target(const ConstraintTarget& ct) {
    if (!std::isfinite(ct.target)) throw UsageError("ConstraintTarget: non-finite target");
    if (ct.kind == ConstraintKind::Variance) {
        if (ct.target < 0.0) throw UsageError("ConstraintTarget: variance target must be >= 0");
        if (!std::isfinite(ct.center)) throw UsageError("ConstraintTarget: non-finite center");
    }
}

void check_lengths(const PolicyDistribution& pi, const QVector& qv, const char* op) {
    if (pi.probs.size() != qv.q.size()) {
        std::ostringstream msg;
        msg << op << ": length mismatch, policy has " << pi.probs.size()
            << " entries but q has " << qv.q.size();
        throw UsageError(msg.str());
    }
}

PolicyDistribution constrained_policy(const QVector& qv, double lambda, const ConstraintTarget& ct) {
    if (ct.kind == ConstraintKind::Mean) return mean_constrained_policy(qv, lambda);
    return variance_constrained_policy(qv, lambda, ct.center);
}

std::string solve_diagnostic(const QVector& qv, const ConstraintTarget& ct,
                             std::span<const double> trace, const char* what) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "solve_lambda: " << what << "; q = [";
    for (std::size_t i = 0; i < qv.q.size(); ++i) msg << (i ? ", " : "") << qv.q[i];
    msg << "], alpha = " << qv.alpha
        << ", kind = " << (ct.kind == ConstraintKind::Mean ? "mean" : "variance")
        << ", target = " << ct.target;
    if (ct.kind == ConstraintKind::Variance) msg << ", center = " << ct.center;
    msg << ", lambda trace = [";
    for (std::size_t i = 0; i < trace.size(); ++i) msg << (i ? ", " : "") << trace[i];
    msg << "]";
    return msg.str();
}

}  // namespace

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::ClippedLow: return "clipped_low";
        case SolveStatus::ClippedHigh: return "clipped_high";
        case SolveStatus::Degenerate: return "degenerate";
    }
    return "unknown";
}

PolicyDistribution stable_softmax(std::span<const double> logits) {
    if (logits.empty()) throw UsageError("stable_softmax: empty logit vector");
    double top = -std::numeric_limits<double>::infinity();
    for (double v : logits) {
        if (std::isnan(v) || !std::isfinite(v)) {
            throw UsageError("stable_softmax: non-finite logit");
        }
        top = std::max(top, v);
    }
    PolicyDistribution out;
    out.probs.resize(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        double e = std::exp(logits[i] - top);  // in (0, 1]; underflow gives exact 0
        out.probs[i] = e;
        total += e;
    }
    for (double& p : out.probs) p /= total;
    return out;
}

PolicyDistribution surrogate_policy(const QVector& qv) {
    validate_q_vector(qv);
    std::vector<double> logits(qv.q.size());
    for (std::size_t i = 0; i < qv.q.size(); ++i) logits[i] = qv.q[i] / qv.alpha;
    return stable_softmax(logits);
}

PolicyDistribution mean_constrained_policy(const QVector& qv, double lambda1) {
    validate_q_vector(qv);
    if (!(lambda1 >= 0.0 && lambda1 <= 1.0)) {
        throw UsageError("mean_constrained_policy: lambda1 must lie in [0, 1]");
    }
    std::vector<double> logits(qv.q.size());
    double scale = 1.0 - lambda1;
    for (std::size_t i = 0; i < qv.q.size(); ++i) logits[i] = scale * qv.q[i] / qv.alpha;
    return stable_softmax(logits);
}

PolicyDistribution variance_constrained_policy(const QVector& qv, double lambda2, double center) {
    validate_q_vector(qv);
    if (!(lambda2 >= 0.0 && lambda2 <= 1.0)) {
        throw UsageError("variance_constrained_policy: lambda2 must lie in [0, 1]");
    }
    if (!std::isfinite(center)) throw UsageError("variance_constrained_policy: non-finite center");
    std::vector<double> logits(qv.q.size());
    for (std::size_t i = 0; i < qv.q.size(); ++i) {
        double dev = qv.q[i] - center;
        logits[i] = (qv.q[i] - lambda2 * dev * dev) / qv.alpha;
    }
    return stable_softmax(logits);
}

double expected_mean(const PolicyDistribution& pi, const QVector& qv) {
    check_lengths(pi, qv, "expected_mean");
    double acc = 0.0;
    for (std::size_t i = 0; i < pi.probs.size(); ++i) acc += pi.probs[i] * qv.q[i];
    return acc;
}

double expected_variance(const PolicyDistribution& pi, const QVector& qv, double center) {
    check_lengths(pi, qv, "expected_variance");
    if (!std::isfinite(center)) throw UsageError("expected_variance: non-finite center");
    double acc = 0.0;
    for (std::size_t i = 0; i < pi.probs.size(); ++i) {
        double dev = qv.q[i] - center;
        acc += pi.probs[i] * dev * dev;
    }
    return acc;
}

double policy_entropy(const PolicyDistribution& pi) {
    double h = 0.0;
    for (double p : pi.probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double g_residual(const QVector& qv, double lambda, const ConstraintTarget& ct) {
    validate_q_vector(qv);
    validate_target(ct);
    if (!std::isfinite(lambda)) throw UsageError("g_residual: non-finite lambda");
    PolicyDistribution pi = constrained_policy(qv, lambda, ct);
    if (ct.kind == ConstraintKind::Mean) return expected_mean(pi, qv) - ct.target;
    return expected_variance(pi, qv, ct.center) - ct.target;
}

double g_derivative(const QVector& qv, double lambda, const ConstraintTarget& ct) {
    validate_q_vector(qv);
    validate_target(ct);
    if (!std::isfinite(lambda)) throw UsageError("g_derivative: non-finite lambda");
    PolicyDistribution pi = constrained_policy(qv, lambda, ct);
    const std::size_t n = qv.q.size();
    if (ct.kind == ConstraintKind::Mean) {
        // -(1/alpha) * Var_pi[q], centered for numerical stability
        double mean = expected_mean(pi, qv);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = qv.q[i] - mean;
            var += pi.probs[i] * d * d;
        }
        return -var / qv.alpha;
    }
    // -(1/alpha) * (E[(q-c)^4] - E[(q-c)^2]^2) = -(1/alpha) * Var_pi[(q-c)^2]
    double mean_dev2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = qv.q[i] - ct.center;
        mean_dev2 += pi.probs[i] * d * d;
    }
    double spread = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = qv.q[i] - ct.center;
        double e = d * d - mean_dev2;
        spread += pi.probs[i] * e * e;
    }
    return -spread / qv.alpha;
}

LagrangeSolution solve_lambda(const QVector& qv, const ConstraintTarget& ct,
                              const SolveOptions& options) {
    validate_q_vector(qv);
    validate_target(ct);

    std::vector<double> trace{0.0};
    auto residual_at = [&](double lam) {
        double g = g_residual(qv, lam, ct);
        if (!std::isfinite(g)) {
            throw NumericalError(solve_diagnostic(qv, ct, trace, "non-finite residual"));
        }
        return g;
    };

    const double g0 = residual_at(0.0);
    const double g1 = residual_at(1.0);

    // Degenerate means the residual itself is flat (constant q, or constant
    // squared deviations): no lambda carries information. Checked before the
    // residual so a vacuous constraint reports Degenerate even when the
    // target happens to match. A merely flat start (sharply peaked policy at
    // lambda = 0) is not degenerate; the bisection fallback below still
    // reaches its root.
    if (std::abs(g_derivative(qv, 0.0, ct)) < options.derivative_floor &&
        std::abs(g0 - g1) <= 1e-12 * std::max(1.0, std::abs(g0))) {
        return {0.0, std::abs(g0), 0, SolveStatus::Degenerate};
    }
    if (std::abs(g0) <= options.delta) {
        return {0.0, std::abs(g0), 0, SolveStatus::Converged};
    }

    double lam = 0.0;
    double g = g0;
    int iterations = 0;
    bool left_interval = false;
    while (iterations < options.max_iterations) {
        double gp = g_derivative(qv, lam, ct);
        if (std::abs(gp) < options.derivative_floor) break;  // flat here; bracket instead
        double step = g / gp;
        double next = lam - step;
        if (!std::isfinite(next)) {
            throw NumericalError(solve_diagnostic(qv, ct, trace, "non-finite Newton iterate"));
        }
        ++iterations;
        if (next < 0.0 || next > 1.0) {
            left_interval = true;
            break;
        }
        lam = next;
        trace.push_back(lam);
        g = residual_at(lam);
        if (std::abs(g) <= options.delta) {
            return {lam, std::abs(g), iterations, SolveStatus::Converged};
        }
        // Stagnation at the floating-point noise floor of g counts as converged.
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(lam))) {
            return {lam, std::abs(g), iterations, SolveStatus::Converged};
        }
    }
    (void)left_interval;

    // Fallback: sign analysis on the interval ends, then bisection.
    if (g0 * g1 >= 0.0) {
        if (std::abs(g0) <= std::abs(g1)) {
            return {0.0, std::abs(g0), iterations, SolveStatus::ClippedLow};
        }
        return {1.0, std::abs(g1), iterations, SolveStatus::ClippedHigh};
    }

    double lo = 0.0, hi = 1.0;
    double g_lo = g0;
    while (hi - lo > options.bisection_tol) {
        double mid = 0.5 * (lo + hi);
        double g_mid = residual_at(mid);
        ++iterations;
        if (std::abs(g_mid) <= options.delta) {
            return {mid, std::abs(g_mid), iterations, SolveStatus::Converged};
        }
        if ((g_lo > 0.0) == (g_mid > 0.0)) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    // Polish within the bracket; keeps the residual at the noise floor.
    double best = 0.5 * (lo + hi);
    double g_best = residual_at(best);
    for (int k = 0; k < 4 && std::abs(g_best) > options.delta; ++k) {
        double gp = g_derivative(qv, best, ct);
        if (std::abs(gp) < options.derivative_floor) break;
        double next = std::clamp(best - g_best / gp, 0.0, 1.0);
        double g_next = residual_at(next);
        ++iterations;
        if (std::abs(g_next) >= std::abs(g_best)) break;
        best = next;
        g_best = g_next;
    }
    trace.push_back(best);
    return {best, std::abs(g_best), iterations, SolveStatus::Converged};
}

}  // namespace dsac
