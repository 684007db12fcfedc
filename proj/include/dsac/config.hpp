#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dsac/agent.hpp"

namespace dsac {

/// Every learner hyperparameter in one validated record.
struct AgentConfig {
    Variant variant = Variant::Dsac;
    double gamma = 0.99;
    int batch_size = 64;
    std::size_t buffer_capacity = 1000000;
    std::vector<int> hidden_layers{512, 512};
    double learning_rate = 3e-4;
    double alpha_learning_rate = 3e-4;  // 0 freezes the temperature
    double initial_alpha = 1.0;
    double target_entropy_discount = 0.98;
    CriticAggregation aggregation = CriticAggregation::Average;
    double tau = 1.0;
    int target_update_period = 1000;
    int gradient_steps_per_env_step = 1;
    int warmup_steps = 1000;
    ConstraintSource constraint_source = ConstraintSource::Online;
    std::uint64_t seed = 0;

    void validate() const;
};

/// A training run: the agent plus the environment and schedule around it.
struct RunConfig {
    AgentConfig agent;
    std::string env = "chain:n=10,slip=0.1";
    std::int64_t total_steps = 50000;
    int eval_interval = 1000;
    int eval_episodes = 10;
    int checkpoint_interval = 0;  // 0: final checkpoint only

    void validate() const;
};

Variant parse_variant(const std::string& text);
CriticAggregation parse_aggregation(const std::string& text);
ConstraintSource parse_constraint_source(const std::string& text);

/// Flat key-value codec. Unknown keys are rejected; round-trips exactly.
RunConfig run_config_from_kv(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> run_config_to_kv(const RunConfig& config);

/// Applies "key=value" text onto an existing config.
void apply_override(RunConfig& config, const std::string& assignment);

/// Loads a flat key-value config file ('#' comments, blank lines allowed).
RunConfig load_run_config(const std::string& path);

std::string render_config(const RunConfig& config);

}  // namespace dsac
