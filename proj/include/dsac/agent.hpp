#pragma once

#include <span>
#include <vector>

#include "dsac/maxent.hpp"
#include "dsac/net.hpp"
#include "dsac/replay.hpp"

namespace dsac {

enum class Variant { Dsac, DsacMean, DsacVariance };
enum class CriticAggregation { Min, Average };
enum class ConstraintSource { Online, Target };

/// Temperature optimized in log-space so alpha = exp(log_alpha) stays > 0.
struct TemperatureState {
    double log_alpha = 0.0;
    double target_entropy = 0.0;
    double learning_rate = 3e-4;

    double alpha() const;
};

TemperatureState make_temperature(int action_count, double entropy_discount, double initial_alpha,
                                  double learning_rate);

/// Log-probabilities and probabilities of the actor at one observation.
struct ActorPolicy {
    std::vector<double> log_probs;
    std::vector<double> probs;
};

ActorPolicy actor_policy(const Network& actor, std::span<const double> obs);

/// V(s) = Sum_a pi(a|s) [agg(Q1, Q2) - alpha * log pi(a|s)]. Zero-probability
/// actions contribute exactly 0.
double soft_state_value(const Network& actor, const Network& target_q1, const Network& target_q2,
                        std::span<const double> next_obs, double alpha, CriticAggregation agg);

/// y_i = r_i + gamma * (1 - done_i) * V(s'_i).
std::vector<double> critic_targets(std::span<const Transition> batch, const Network& actor,
                                   const Network& target_q1, const Network& target_q2, double alpha,
                                   double gamma, CriticAggregation agg);

/// Mean squared TD error of one critic; gradient lands only on the
/// taken-action outputs. Returns the loss and fills `grad`.
double critic_loss_and_grad(std::span<const Transition> batch, const Network& critic,
                            std::span<const double> targets, std::vector<double>& grad);

struct CriticUpdate {
    double loss = 0.0;  // mean over the batch and over both critics
    std::vector<double> grad1;
    std::vector<double> grad2;
};

CriticUpdate critic_loss_and_grads(std::span<const Transition> batch, const Network& q1,
                                   const Network& q2, std::span<const double> targets);

/// Per-state constraint diagnostics from the actor update.
struct StateConstraint {
    double lambda = 0.0;
    SolveStatus status = SolveStatus::Converged;
    double mu_surrogate = 0.0;      // expected Q under the surrogate critic policy
    double sigma2_surrogate = 0.0;  // variance under the surrogate policy, about its own mean
    double mu_actor = 0.0;          // expected Q under the actor
    double var_actor = 0.0;         // actor's squared deviation about mu_actor
};

struct ActorUpdate {
    double loss = 0.0;
    std::vector<double> grad;
    std::vector<StateConstraint> constraints;  // one per state; empty for plain DSAC
    double mean_entropy = 0.0;
};

/// KL-form actor loss with the critic outputs held constant; the constrained
/// variants add the Lagrangian penalty with lambda solved fresh per state and
/// then frozen. With source = Target the surrogate statistics and the lambda
/// solve read the target critics instead of the online pair.
ActorUpdate actor_loss_and_grads(std::span<const Transition> batch, const Network& actor,
                                 const Network& q1, const Network& q2, double alpha, Variant variant,
                                 ConstraintSource source = ConstraintSource::Online,
                                 const Network* target_q1 = nullptr,
                                 const Network* target_q2 = nullptr);

struct TemperatureUpdate {
    double loss = 0.0;          // J(alpha) = alpha * (mean entropy - target)
    double mean_entropy = 0.0;
    double gradient = 0.0;      // dJ/dlog_alpha before the step
};

/// Gradient step on log_alpha: entropy below target raises alpha, above
/// lowers it.
TemperatureUpdate temperature_loss_and_update(std::span<const Transition> batch,
                                              const Network& actor, TemperatureState& temp);

const char* to_string(Variant variant);
const char* to_string(CriticAggregation agg);
const char* to_string(ConstraintSource source);

}  // namespace dsac
