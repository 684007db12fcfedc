#include "dsac/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dsac/errors.hpp"

namespace dsac {
namespace {

std::vector<double> pack_states(std::span<const Transition> batch, int input_dim, bool next) {
    std::vector<double> packed(batch.size() * static_cast<std::size_t>(input_dim));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::vector<double>& obs = next ? batch[i].next_state : batch[i].state;
        if (static_cast<int>(obs.size()) != input_dim) {
            throw UsageError("batch observation does not match the network input dimension");
        }
        std::copy(obs.begin(), obs.end(), packed.begin() + static_cast<std::ptrdiff_t>(i) * input_dim);
    }
    return packed;
}

void log_softmax_row(std::span<const double> logits, std::span<double> log_probs,
                     std::span<double> probs) {
    double top = -std::numeric_limits<double>::infinity();
    for (double v : logits) top = std::max(top, v);
    double acc = 0.0;
    for (double v : logits) acc += std::exp(v - top);
    const double lse = top + std::log(acc);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        log_probs[i] = logits[i] - lse;
        probs[i] = std::exp(log_probs[i]);
    }
}

double entropy_row(std::span<const double> probs, std::span<const double> log_probs) {
    double h = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] > 0.0) h -= probs[i] * log_probs[i];
    }
    return h;
}

}  // namespace

double TemperatureState::alpha() const { return std::exp(log_alpha); }

TemperatureState make_temperature(int action_count, double entropy_discount, double initial_alpha,
                                  double learning_rate) {
    if (action_count < 1) throw UsageError("make_temperature: action count must be >= 1");
    if (!(initial_alpha > 0.0)) throw UsageError("make_temperature: initial alpha must be > 0");
    if (!(learning_rate >= 0.0)) throw UsageError("make_temperature: learning rate must be >= 0");
    TemperatureState temp;
    temp.log_alpha = std::log(initial_alpha);
    temp.target_entropy = entropy_discount * std::log(static_cast<double>(action_count));
    temp.learning_rate = learning_rate;
    return temp;
}

ActorPolicy actor_policy(const Network& actor, std::span<const double> obs) {
    std::vector<double> logits = forward(actor, obs);
    ActorPolicy policy;
    policy.log_probs.resize(logits.size());
    policy.probs.resize(logits.size());
    log_softmax_row(logits, policy.log_probs, policy.probs);
    return policy;
}

double soft_state_value(const Network& actor, const Network& target_q1, const Network& target_q2,
                        std::span<const double> next_obs, double alpha, CriticAggregation agg) {
    if (!(alpha > 0.0)) throw UsageError("soft_state_value: alpha must be > 0");
    ActorPolicy pi = actor_policy(actor, next_obs);
    std::vector<double> q1 = forward(target_q1, next_obs);
    std::vector<double> q2 = forward(target_q2, next_obs);
    if (q1.size() != pi.probs.size() || q2.size() != pi.probs.size()) {
        throw UsageError("soft_state_value: actor and critics disagree on the action count");
    }
    double value = 0.0;
    for (std::size_t a = 0; a < pi.probs.size(); ++a) {
        const double p = pi.probs[a];
        if (p == 0.0) continue;  // exact zero contribution
        const double q = agg == CriticAggregation::Min ? std::min(q1[a], q2[a])
                                                       : 0.5 * (q1[a] + q2[a]);
        if (!std::isfinite(q)) throw NumericalError("soft_state_value: non-finite critic output");
        value += p * (q - alpha * pi.log_probs[a]);
    }
    return value;
}

std::vector<double> critic_targets(std::span<const Transition> batch, const Network& actor,
                                   const Network& target_q1, const Network& target_q2, double alpha,
                                   double gamma, CriticAggregation agg) {
    if (batch.empty()) throw UsageError("critic_targets: empty batch");
    std::vector<double> targets(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double bootstrap = 0.0;
        if (!batch[i].done) {
            bootstrap = gamma * soft_state_value(actor, target_q1, target_q2, batch[i].next_state,
                                                 alpha, agg);
        }
        targets[i] = batch[i].reward + bootstrap;
        if (!std::isfinite(targets[i])) throw NumericalError("critic_targets: non-finite target");
    }
    return targets;
}

double critic_loss_and_grad(std::span<const Transition> batch, const Network& critic,
                            std::span<const double> targets, std::vector<double>& grad) {
    if (batch.empty()) throw UsageError("critic loss: empty batch");
    if (targets.size() != batch.size()) throw UsageError("critic loss: target count mismatch");
    const int batch_size = static_cast<int>(batch.size());
    const int actions = critic.spec.output_dim;

    std::vector<double> inputs = pack_states(batch, critic.spec.input_dim, false);
    ForwardTape tape;
    forward_batch(critic, inputs, batch_size, tape);
    const std::vector<double>& q = tape.activations.back();

    double loss = 0.0;
    std::vector<double> output_grads(static_cast<std::size_t>(batch_size) * actions, 0.0);
    const double inv_batch = 1.0 / static_cast<double>(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        const int a = batch[static_cast<std::size_t>(i)].action;
        if (a < 0 || a >= actions) throw UsageError("critic loss: action index out of range");
        const double diff = q[static_cast<std::size_t>(i) * actions + a] - targets[static_cast<std::size_t>(i)];
        loss += diff * diff * inv_batch;
        output_grads[static_cast<std::size_t>(i) * actions + a] = 2.0 * diff * inv_batch;
    }

    grad.assign(parameter_count(critic.spec), 0.0);
    backward_batch(critic, tape, output_grads, grad);
    return loss;
}

CriticUpdate critic_loss_and_grads(std::span<const Transition> batch, const Network& q1,
                                   const Network& q2, std::span<const double> targets) {
    CriticUpdate update;
    const double loss1 = critic_loss_and_grad(batch, q1, targets, update.grad1);
    const double loss2 = critic_loss_and_grad(batch, q2, targets, update.grad2);
    update.loss = 0.5 * (loss1 + loss2);
    return update;
}

ActorUpdate actor_loss_and_grads(std::span<const Transition> batch, const Network& actor,
                                 const Network& q1, const Network& q2, double alpha, Variant variant,
                                 ConstraintSource source, const Network* target_q1,
                                 const Network* target_q2) {
    if (batch.empty()) throw UsageError("actor loss: empty batch");
    if (!(alpha > 0.0)) throw UsageError("actor loss: alpha must be > 0");
    if (source == ConstraintSource::Target && (target_q1 == nullptr || target_q2 == nullptr)) {
        throw UsageError("actor loss: target critics required when constraints read them");
    }
    const int batch_size = static_cast<int>(batch.size());
    const int actions = actor.spec.output_dim;
    const double inv_batch = 1.0 / static_cast<double>(batch_size);

    std::vector<double> inputs = pack_states(batch, actor.spec.input_dim, false);
    ForwardTape actor_tape, q1_tape, q2_tape;
    forward_batch(actor, inputs, batch_size, actor_tape);
    forward_batch(q1, inputs, batch_size, q1_tape);
    forward_batch(q2, inputs, batch_size, q2_tape);
    const std::vector<double>& logits = actor_tape.activations.back();
    const std::vector<double>& q1_out = q1_tape.activations.back();
    const std::vector<double>& q2_out = q2_tape.activations.back();

    // Optional separate Q source for the surrogate statistics and lambda solve.
    ForwardTape tq1_tape, tq2_tape;
    if (source == ConstraintSource::Target) {
        forward_batch(*target_q1, inputs, batch_size, tq1_tape);
        forward_batch(*target_q2, inputs, batch_size, tq2_tape);
    }

    ActorUpdate update;
    if (variant != Variant::Dsac) update.constraints.resize(static_cast<std::size_t>(batch_size));

    std::vector<double> log_probs(static_cast<std::size_t>(actions));
    std::vector<double> probs(static_cast<std::size_t>(actions));
    std::vector<double> q_avg(static_cast<std::size_t>(actions));
    std::vector<double> q_constraint(static_cast<std::size_t>(actions));
    std::vector<double> output_grads(static_cast<std::size_t>(batch_size) * actions, 0.0);

    double loss = 0.0;
    double entropy_sum = 0.0;
    for (int i = 0; i < batch_size; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * actions;
        log_softmax_row({logits.data() + row, static_cast<std::size_t>(actions)}, log_probs, probs);
        for (int a = 0; a < actions; ++a) {
            q_avg[static_cast<std::size_t>(a)] =
                0.5 * (q1_out[row + a] + q2_out[row + a]);
            if (!std::isfinite(q_avg[static_cast<std::size_t>(a)])) {
                throw NumericalError("actor loss: non-finite critic output");
            }
        }
        if (source == ConstraintSource::Target) {
            for (int a = 0; a < actions; ++a) {
                q_constraint[static_cast<std::size_t>(a)] =
                    0.5 * (tq1_tape.activations.back()[row + a] + tq2_tape.activations.back()[row + a]);
            }
        } else {
            q_constraint = q_avg;
        }

        double mu_actor = 0.0;
        double mean_log = 0.0;
        for (int a = 0; a < actions; ++a) {
            mu_actor += probs[static_cast<std::size_t>(a)] * q_avg[static_cast<std::size_t>(a)];
            if (probs[static_cast<std::size_t>(a)] > 0.0) {
                mean_log += probs[static_cast<std::size_t>(a)] * log_probs[static_cast<std::size_t>(a)];
            }
        }
        const double entropy = -mean_log;
        entropy_sum += entropy;

        // Base KL-form objective: E_pi[alpha * log pi - Q].
        loss += (alpha * mean_log - mu_actor) * inv_batch;
        for (int a = 0; a < actions; ++a) {
            const double p = probs[static_cast<std::size_t>(a)];
            if (p == 0.0) continue;
            const double dz = p * (alpha * (log_probs[static_cast<std::size_t>(a)] - mean_log) -
                                   (q_avg[static_cast<std::size_t>(a)] - mu_actor));
            output_grads[row + a] = dz * inv_batch;
        }

        if (variant == Variant::Dsac) continue;

        QVector qv{q_constraint, alpha};
        StateConstraint& sc = update.constraints[static_cast<std::size_t>(i)];
        PolicyDistribution surrogate = surrogate_policy(qv);
        sc.mu_surrogate = expected_mean(surrogate, qv);
        sc.mu_actor = mu_actor;

        if (variant == Variant::DsacMean) {
            // lambda reproduces the actor's current expected Q inside the
            // mean-constrained family; the penalty drags E_pi[Q] toward the
            // surrogate's mean.
            double actor_mean_c = 0.0;
            for (int a = 0; a < actions; ++a) {
                actor_mean_c += probs[static_cast<std::size_t>(a)] * q_constraint[static_cast<std::size_t>(a)];
            }
            LagrangeSolution sol = solve_lambda(qv, {ConstraintKind::Mean, actor_mean_c, 0.0});
            sc.lambda = sol.lambda;
            sc.status = sol.status;
            const double violation = mu_actor - sc.mu_surrogate;
            loss += sc.lambda * violation * inv_batch;
            if (sc.lambda != 0.0) {
                for (int a = 0; a < actions; ++a) {
                    const double p = probs[static_cast<std::size_t>(a)];
                    if (p == 0.0) continue;
                    output_grads[row + a] +=
                        sc.lambda * p * (q_avg[static_cast<std::size_t>(a)] - mu_actor) * inv_batch;
                }
            }
        } else {
            // Variance form: deviations are centered on the actor's own
            // expected Q, held constant through the gradient.
            double mu_actor_c = 0.0;
            for (int a = 0; a < actions; ++a) {
                mu_actor_c += probs[static_cast<std::size_t>(a)] * q_constraint[static_cast<std::size_t>(a)];
            }
            double var_actor_c = 0.0;
            for (int a = 0; a < actions; ++a) {
                const double d = q_constraint[static_cast<std::size_t>(a)] - mu_actor_c;
                var_actor_c += probs[static_cast<std::size_t>(a)] * d * d;
            }
            sc.sigma2_surrogate = expected_variance(surrogate, qv, sc.mu_surrogate);
            LagrangeSolution sol =
                solve_lambda(qv, {ConstraintKind::Variance, var_actor_c, mu_actor_c});
            sc.lambda = sol.lambda;
            sc.status = sol.status;

            double var_actor = 0.0;
            for (int a = 0; a < actions; ++a) {
                const double d = q_avg[static_cast<std::size_t>(a)] - mu_actor;
                var_actor += probs[static_cast<std::size_t>(a)] * d * d;
            }
            sc.var_actor = var_actor;
            const double violation = var_actor - sc.sigma2_surrogate;
            loss += sc.lambda * violation * inv_batch;
            if (sc.lambda != 0.0) {
                for (int a = 0; a < actions; ++a) {
                    const double p = probs[static_cast<std::size_t>(a)];
                    if (p == 0.0) continue;
                    const double d = q_avg[static_cast<std::size_t>(a)] - mu_actor;
                    output_grads[row + a] += sc.lambda * p * (d * d - var_actor) * inv_batch;
                }
            }
        }
    }

    update.loss = loss;
    update.mean_entropy = entropy_sum * inv_batch;
    update.grad.assign(parameter_count(actor.spec), 0.0);
    backward_batch(actor, actor_tape, output_grads, update.grad);
    return update;
}

TemperatureUpdate temperature_loss_and_update(std::span<const Transition> batch,
                                              const Network& actor, TemperatureState& temp) {
    if (batch.empty()) throw UsageError("temperature update: empty batch");
    const int batch_size = static_cast<int>(batch.size());
    const int actions = actor.spec.output_dim;

    std::vector<double> inputs = pack_states(batch, actor.spec.input_dim, false);
    ForwardTape tape;
    forward_batch(actor, inputs, batch_size, tape);
    const std::vector<double>& logits = tape.activations.back();

    std::vector<double> log_probs(static_cast<std::size_t>(actions));
    std::vector<double> probs(static_cast<std::size_t>(actions));
    double entropy_sum = 0.0;
    for (int i = 0; i < batch_size; ++i) {
        const std::size_t row = static_cast<std::size_t>(i) * actions;
        log_softmax_row({logits.data() + row, static_cast<std::size_t>(actions)}, log_probs, probs);
        entropy_sum += entropy_row(probs, log_probs);
    }

    TemperatureUpdate update;
    update.mean_entropy = entropy_sum / static_cast<double>(batch_size);
    const double alpha = temp.alpha();
    update.loss = alpha * (update.mean_entropy - temp.target_entropy);
    update.gradient = alpha * (update.mean_entropy - temp.target_entropy);
    temp.log_alpha -= temp.learning_rate * update.gradient;
    return update;
}

const char* to_string(Variant variant) {
    switch (variant) {
        case Variant::Dsac: return "dsac";
        case Variant::DsacMean: return "dsac-m";
        case Variant::DsacVariance: return "dsac-v";
    }
    return "unknown";
}

const char* to_string(CriticAggregation agg) {
    switch (agg) {
        case CriticAggregation::Min: return "min";
        case CriticAggregation::Average: return "avg";
    }
    return "unknown";
}

const char* to_string(ConstraintSource source) {
    switch (source) {
        case ConstraintSource::Online: return "online";
        case ConstraintSource::Target: return "target";
    }
    return "unknown";
}

}  // namespace dsac
