#pragma once

#include <functional>
#include <vector>

#include "dsac/agent.hpp"
#include "dsac/config.hpp"
#include "dsac/env.hpp"
#include "dsac/metrics.hpp"

namespace dsac {

enum class EvalMode { Greedy, Stochastic };

struct EvalStats {
    std::vector<double> returns;
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
};

/// Rolls out `episodes` episodes. Greedy plays the argmax of the actor's
/// probabilities (ties to the lowest index); episode seeds derive from
/// seed_base so repeated calls reproduce exactly.
EvalStats evaluate(const Network& actor, Env& env, int episodes, EvalMode mode,
                   std::uint64_t seed_base);

/// Live training state; callbacks observe it, the caller receives it at the end.
struct TrainResult {
    Network actor, q1, q2, target_q1, target_q2;
    OptimizerState actor_opt, q1_opt, q2_opt;
    TemperatureState temperature;
    std::vector<MetricsRecord> records;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    std::int64_t lambda_count = 0;
    std::int64_t env_steps = 0;
    std::int64_t gradient_steps = 0;
    std::int64_t episodes = 0;
};

using MetricsCallback = std::function<void(const MetricsRecord&)>;
using CheckpointCallback = std::function<void(std::int64_t step, const TrainResult&)>;

/// Off-policy training loop: sample actions from the actor, store
/// transitions, and after warmup run critic / actor / temperature updates
/// with periodic target copies. Deterministic given the config seed.
TrainResult train(const RunConfig& config, Env& env, Env& eval_env,
                  const MetricsCallback& on_metrics = {},
                  const CheckpointCallback& on_checkpoint = {});

/// Builds the training and evaluation envs from config.env.
TrainResult train(const RunConfig& config, const MetricsCallback& on_metrics = {},
                  const CheckpointCallback& on_checkpoint = {});

/// Seed base used for in-training evaluation episodes; exposed so external
/// evaluation can reproduce the training curve's eval set.
std::uint64_t eval_seed_base(std::uint64_t config_seed);

}  // namespace dsac
