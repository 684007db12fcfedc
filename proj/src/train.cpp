#include "dsac/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dsac/errors.hpp"
#include "dsac/rng.hpp"

namespace dsac {
namespace {

// Stream tags for deriving independent rngs from the one config seed.
constexpr std::uint64_t kActorNet = 1, kCritic1Net = 2, kCritic2Net = 3;
constexpr std::uint64_t kSampler = 4, kActions = 5, kEnvSeeds = 6, kEval = 7, kDiagnostics = 8;

int greedy_action(std::span<const double> probs) {
    int best = 0;
    for (int a = 1; a < static_cast<int>(probs.size()); ++a) {
        if (probs[static_cast<std::size_t>(a)] > probs[static_cast<std::size_t>(best)]) best = a;
    }
    return best;
}

struct DiagnosticStats {
    double entropy = 0.0;
    double ev_mean_gap = 0.0;
    double ev_var_gap = 0.0;
    double q_mean = 0.0;
};

// Actor-vs-surrogate expected-value gaps over a sampled batch of states.
DiagnosticStats diagnostics(const ReplayBuffer& buffer, Rng& rng, int batch_size,
                            const Network& actor, const Network& q1, const Network& q2,
                            double alpha) {
    DiagnosticStats stats;
    const int count = std::min<int>(batch_size, static_cast<int>(buffer.size()));
    if (count == 0) return stats;
    for (int i = 0; i < count; ++i) {
        const Transition& tr = buffer.at(static_cast<std::size_t>(rng.uniform_int(static_cast<int>(buffer.size()))));
        ActorPolicy pi = actor_policy(actor, tr.state);
        std::vector<double> qa = forward(q1, tr.state);
        std::vector<double> qb = forward(q2, tr.state);
        QVector qv{qa, alpha};
        for (std::size_t a = 0; a < qa.size(); ++a) qv.q[a] = 0.5 * (qa[a] + qb[a]);

        double mu_actor = 0.0;
        for (std::size_t a = 0; a < qv.q.size(); ++a) mu_actor += pi.probs[a] * qv.q[a];
        double var_actor = 0.0;
        for (std::size_t a = 0; a < qv.q.size(); ++a) {
            const double d = qv.q[a] - mu_actor;
            var_actor += pi.probs[a] * d * d;
        }
        PolicyDistribution surrogate = surrogate_policy(qv);
        const double mu_surrogate = expected_mean(surrogate, qv);
        const double sigma2_surrogate = expected_variance(surrogate, qv, mu_surrogate);

        double entropy = 0.0;
        for (std::size_t a = 0; a < pi.probs.size(); ++a) {
            if (pi.probs[a] > 0.0) entropy -= pi.probs[a] * pi.log_probs[a];
        }
        stats.entropy += entropy;
        stats.ev_mean_gap += std::abs(mu_actor - mu_surrogate);
        stats.ev_var_gap += std::abs(var_actor - sigma2_surrogate);
        stats.q_mean += mu_actor;
    }
    stats.entropy /= count;
    stats.ev_mean_gap /= count;
    stats.ev_var_gap /= count;
    stats.q_mean /= count;
    return stats;
}

}  // namespace

std::uint64_t eval_seed_base(std::uint64_t config_seed) { return mix_seed(config_seed, kEval); }

EvalStats evaluate(const Network& actor, Env& env, int episodes, EvalMode mode,
                   std::uint64_t seed_base) {
    if (episodes < 1) throw UsageError("evaluate: episodes must be >= 1");
    EvalStats stats;
    stats.returns.reserve(static_cast<std::size_t>(episodes));
    for (int ep = 0; ep < episodes; ++ep) {
        Rng action_rng(mix_seed(seed_base, 0x9000u + static_cast<std::uint64_t>(ep)));
        std::vector<double> obs = env.reset(mix_seed(seed_base, static_cast<std::uint64_t>(ep)));
        double episode_return = 0.0;
        while (true) {
            ActorPolicy pi = actor_policy(actor, obs);
            const int action = mode == EvalMode::Greedy ? greedy_action(pi.probs)
                                                        : action_rng.sample_index(pi.probs);
            StepResult result = env.step(action);
            episode_return += result.reward;
            if (result.terminal || result.truncated) break;
            obs = std::move(result.obs);
        }
        stats.returns.push_back(episode_return);
    }
    double sum = 0.0;
    for (double r : stats.returns) sum += r;
    stats.mean = sum / static_cast<double>(episodes);
    double sq = 0.0;
    for (double r : stats.returns) sq += (r - stats.mean) * (r - stats.mean);
    stats.stddev = std::sqrt(sq / static_cast<double>(episodes));
    return stats;
}

TrainResult train(const RunConfig& config, Env& env, Env& eval_env,
                  const MetricsCallback& on_metrics, const CheckpointCallback& on_checkpoint) {
    config.validate();
    const AgentConfig& agent = config.agent;
    const EnvDescription& desc = env.description();
    if (desc.action_count < 2) throw UsageError("train: env must have at least 2 actions");

    NetworkSpec spec;
    spec.input_dim = desc.observation_dim;
    spec.hidden_layers = agent.hidden_layers;
    spec.output_dim = desc.action_count;
    spec.seed = mix_seed(agent.seed, kActorNet);

    TrainResult result;
    result.actor = make_network(spec);
    spec.seed = mix_seed(agent.seed, kCritic1Net);
    result.q1 = make_network(spec);
    spec.seed = mix_seed(agent.seed, kCritic2Net);
    result.q2 = make_network(spec);
    result.target_q1 = result.q1;
    result.target_q2 = result.q2;
    result.actor_opt = make_optimizer(result.actor, agent.learning_rate);
    result.q1_opt = make_optimizer(result.q1, agent.learning_rate);
    result.q2_opt = make_optimizer(result.q2, agent.learning_rate);
    result.temperature = make_temperature(desc.action_count, agent.target_entropy_discount,
                                          agent.initial_alpha, agent.alpha_learning_rate);
    result.lambda_min = std::numeric_limits<double>::infinity();
    result.lambda_max = -std::numeric_limits<double>::infinity();

    ReplayBuffer buffer(agent.buffer_capacity, mix_seed(agent.seed, kSampler));
    Rng action_rng(mix_seed(agent.seed, kActions));
    Rng diag_rng(mix_seed(agent.seed, kDiagnostics));

    std::vector<double> obs = env.reset(mix_seed(mix_seed(agent.seed, kEnvSeeds), 0));

    double lambda_abs_sum = 0.0;
    std::int64_t lambda_window = 0;

    for (std::int64_t step = 1; step <= config.total_steps; ++step) {
        ActorPolicy pi = actor_policy(result.actor, obs);
        const int action = action_rng.sample_index(pi.probs);
        StepResult sr = env.step(action);
        buffer.push({obs, action, sr.reward, sr.obs, sr.terminal});
        if (sr.terminal || sr.truncated) {
            result.episodes += 1;
            obs = env.reset(mix_seed(mix_seed(agent.seed, kEnvSeeds),
                                     static_cast<std::uint64_t>(result.episodes)));
        } else {
            obs = std::move(sr.obs);
        }
        result.env_steps = step;

        const bool learning = step >= agent.warmup_steps &&
                              buffer.size() >= static_cast<std::size_t>(agent.batch_size);
        if (learning) {
            for (int g = 0; g < agent.gradient_steps_per_env_step; ++g) {
                std::vector<Transition> batch = buffer.sample(agent.batch_size);
                const double alpha = result.temperature.alpha();

                std::vector<double> targets =
                    critic_targets(batch, result.actor, result.target_q1, result.target_q2, alpha,
                                   agent.gamma, agent.aggregation);
                CriticUpdate cu = critic_loss_and_grads(batch, result.q1, result.q2, targets);
                adam_step(result.q1, result.q1_opt, cu.grad1);
                adam_step(result.q2, result.q2_opt, cu.grad2);

                ActorUpdate au = actor_loss_and_grads(
                    batch, result.actor, result.q1, result.q2, alpha, agent.variant,
                    agent.constraint_source, &result.target_q1, &result.target_q2);
                adam_step(result.actor, result.actor_opt, au.grad);
                for (const StateConstraint& sc : au.constraints) {
                    result.lambda_min = std::min(result.lambda_min, sc.lambda);
                    result.lambda_max = std::max(result.lambda_max, sc.lambda);
                    result.lambda_count += 1;
                    lambda_abs_sum += std::abs(sc.lambda);
                    lambda_window += 1;
                }

                temperature_loss_and_update(batch, result.actor, result.temperature);

                if (!std::isfinite(cu.loss) || !std::isfinite(au.loss) ||
                    !std::isfinite(result.temperature.log_alpha)) {
                    std::ostringstream msg;
                    msg << "train: non-finite loss at env step " << step << " (critic " << cu.loss
                        << ", actor " << au.loss << ", log_alpha " << result.temperature.log_alpha
                        << ")";
                    throw NumericalError(msg.str());
                }

                result.gradient_steps += 1;
                if (result.gradient_steps % agent.target_update_period == 0) {
                    target_update(result.q1, result.target_q1, agent.tau);
                    target_update(result.q2, result.target_q2, agent.tau);
                }
            }
        }

        const bool emit = step % config.eval_interval == 0 || step == config.total_steps;
        if (emit) {
            EvalStats eval = evaluate(result.actor, eval_env, config.eval_episodes, EvalMode::Greedy,
                                      eval_seed_base(agent.seed));
            DiagnosticStats diag = diagnostics(buffer, diag_rng, agent.batch_size, result.actor,
                                               result.q1, result.q2, result.temperature.alpha());
            MetricsRecord record;
            record.step = step;
            record.variant = to_string(agent.variant);
            record.seed = agent.seed;
            record.eval_return_mean = eval.mean;
            record.eval_return_std = eval.stddev;
            record.entropy = diag.entropy;
            record.alpha = result.temperature.alpha();
            record.lambda_mean = lambda_window > 0 ? lambda_abs_sum / static_cast<double>(lambda_window) : 0.0;
            record.ev_mean_gap = diag.ev_mean_gap;
            record.ev_var_gap = diag.ev_var_gap;
            record.q_mean = diag.q_mean;
            result.records.push_back(record);
            if (on_metrics) on_metrics(record);
            lambda_abs_sum = 0.0;
            lambda_window = 0;
        }

        if (on_checkpoint && config.checkpoint_interval > 0 &&
            step % config.checkpoint_interval == 0 && step != config.total_steps) {
            on_checkpoint(step, result);
        }
    }

    if (result.lambda_count == 0) {
        result.lambda_min = 0.0;
        result.lambda_max = 0.0;
    }
    if (on_checkpoint) on_checkpoint(config.total_steps, result);
    return result;
}

TrainResult train(const RunConfig& config, const MetricsCallback& on_metrics,
                  const CheckpointCallback& on_checkpoint) {
    auto env = make_env(config.env);
    auto eval_env = make_env(config.env);
    return train(config, *env, *eval_env, on_metrics, on_checkpoint);
}

}  // namespace dsac
