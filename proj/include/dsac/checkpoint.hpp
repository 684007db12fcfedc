#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "dsac/config.hpp"
#include "dsac/train.hpp"

namespace dsac {

/// Full agent snapshot. The on-disk format is versioned little-endian binary;
/// parameters and optimizer state round-trip bit-exactly.
struct AgentCheckpoint {
    std::uint32_t format_version = 1;
    std::string env_spec;
    std::string config_text;  // flat key-value snapshot of the RunConfig
    Variant variant = Variant::Dsac;
    std::uint64_t seed = 0;
    std::int64_t trained_steps = 0;
    TemperatureState temperature;
    Network actor, q1, q2, target_q1, target_q2;
    OptimizerState actor_opt, q1_opt, q2_opt;
};

/// Per-network record: spec, flat parameters, optional optimizer state.
void save_network(std::ostream& out, const Network& net, const OptimizerState* opt);
Network load_network(std::istream& in, std::optional<OptimizerState>& opt_out);

void save_checkpoint(const std::string& path, const AgentCheckpoint& checkpoint);
AgentCheckpoint load_checkpoint(const std::string& path);

AgentCheckpoint checkpoint_from_result(const RunConfig& config, const TrainResult& result);

}  // namespace dsac
