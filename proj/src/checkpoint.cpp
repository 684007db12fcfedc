#include "dsac/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "dsac/errors.hpp"

namespace dsac {
namespace {

constexpr char kMagic[8] = {'D', 'S', 'A', 'C', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw UsageError("checkpoint: truncated file");
    return value;
}

void write_string(std::ostream& out, const std::string& text) {
    write_pod<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_string(std::istream& in) {
    auto size = read_pod<std::uint64_t>(in);
    std::string text(size, '\0');
    in.read(text.data(), static_cast<std::streamsize>(size));
    if (!in) throw UsageError("checkpoint: truncated string field");
    return text;
}

void write_doubles(std::ostream& out, const std::vector<double>& values) {
    write_pod<std::uint64_t>(out, values.size());
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& in) {
    auto size = read_pod<std::uint64_t>(in);
    std::vector<double> values(size);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(size * sizeof(double)));
    if (!in) throw UsageError("checkpoint: truncated double array");
    return values;
}

}  // namespace

void save_network(std::ostream& out, const Network& net, const OptimizerState* opt) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(net.spec.input_dim));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(net.spec.output_dim));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(net.spec.hidden_layers.size()));
    for (int h : net.spec.hidden_layers) write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(h));
    write_pod<std::uint8_t>(out, 0);  // activation id: 0 = ReLU
    write_pod<std::uint64_t>(out, net.spec.seed);
    write_doubles(out, net.parameters);
    write_pod<std::uint8_t>(out, opt != nullptr ? 1 : 0);
    if (opt != nullptr) {
        write_pod<std::int64_t>(out, opt->step_count);
        write_pod<double>(out, opt->learning_rate);
        write_pod<double>(out, opt->beta1);
        write_pod<double>(out, opt->beta2);
        write_pod<double>(out, opt->epsilon);
        write_doubles(out, opt->first_moment);
        write_doubles(out, opt->second_moment);
    }
}

Network load_network(std::istream& in, std::optional<OptimizerState>& opt_out) {
    Network net;
    net.spec.input_dim = static_cast<int>(read_pod<std::uint32_t>(in));
    net.spec.output_dim = static_cast<int>(read_pod<std::uint32_t>(in));
    auto hidden = read_pod<std::uint32_t>(in);
    net.spec.hidden_layers.clear();
    for (std::uint32_t i = 0; i < hidden; ++i) {
        net.spec.hidden_layers.push_back(static_cast<int>(read_pod<std::uint32_t>(in)));
    }
    auto activation = read_pod<std::uint8_t>(in);
    if (activation != 0) throw UsageError("checkpoint: unknown activation id");
    net.spec.activation = Activation::ReLU;
    net.spec.seed = read_pod<std::uint64_t>(in);
    net.parameters = read_doubles(in);
    if (net.parameters.size() != parameter_count(net.spec)) {
        throw UsageError("checkpoint: parameter count does not match the network spec");
    }
    opt_out.reset();
    if (read_pod<std::uint8_t>(in) != 0) {
        OptimizerState opt;
        opt.step_count = read_pod<std::int64_t>(in);
        opt.learning_rate = read_pod<double>(in);
        opt.beta1 = read_pod<double>(in);
        opt.beta2 = read_pod<double>(in);
        opt.epsilon = read_pod<double>(in);
        opt.first_moment = read_doubles(in);
        opt.second_moment = read_doubles(in);
        if (opt.first_moment.size() != net.parameters.size() ||
            opt.second_moment.size() != net.parameters.size()) {
            throw UsageError("checkpoint: optimizer state does not match the network");
        }
        opt_out = std::move(opt);
    }
    return net;
}

void save_checkpoint(const std::string& path, const AgentCheckpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot open checkpoint file \"" + path + "\" for writing");
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, kVersion);
    write_string(out, checkpoint.env_spec);
    write_string(out, checkpoint.config_text);
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(checkpoint.variant));
    write_pod<std::uint64_t>(out, checkpoint.seed);
    write_pod<std::int64_t>(out, checkpoint.trained_steps);
    write_pod<double>(out, checkpoint.temperature.log_alpha);
    write_pod<double>(out, checkpoint.temperature.target_entropy);
    write_pod<double>(out, checkpoint.temperature.learning_rate);
    save_network(out, checkpoint.actor, &checkpoint.actor_opt);
    save_network(out, checkpoint.q1, &checkpoint.q1_opt);
    save_network(out, checkpoint.q2, &checkpoint.q2_opt);
    save_network(out, checkpoint.target_q1, nullptr);
    save_network(out, checkpoint.target_q2, nullptr);
    if (!out) throw UsageError("checkpoint: write failed for \"" + path + "\"");
}

AgentCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open checkpoint file \"" + path + "\"");
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw UsageError("\"" + path + "\" is not a checkpoint file");
    }
    auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion) {
        std::ostringstream msg;
        msg << "checkpoint: unsupported format version " << version;
        throw UsageError(msg.str());
    }
    AgentCheckpoint checkpoint;
    checkpoint.format_version = version;
    checkpoint.env_spec = read_string(in);
    checkpoint.config_text = read_string(in);
    auto variant = read_pod<std::uint8_t>(in);
    if (variant > 2) throw UsageError("checkpoint: unknown variant id");
    checkpoint.variant = static_cast<Variant>(variant);
    checkpoint.seed = read_pod<std::uint64_t>(in);
    checkpoint.trained_steps = read_pod<std::int64_t>(in);
    checkpoint.temperature.log_alpha = read_pod<double>(in);
    checkpoint.temperature.target_entropy = read_pod<double>(in);
    checkpoint.temperature.learning_rate = read_pod<double>(in);

    std::optional<OptimizerState> opt;
    checkpoint.actor = load_network(in, opt);
    if (!opt) throw UsageError("checkpoint: missing actor optimizer state");
    checkpoint.actor_opt = *opt;
    checkpoint.q1 = load_network(in, opt);
    if (!opt) throw UsageError("checkpoint: missing critic optimizer state");
    checkpoint.q1_opt = *opt;
    checkpoint.q2 = load_network(in, opt);
    if (!opt) throw UsageError("checkpoint: missing critic optimizer state");
    checkpoint.q2_opt = *opt;
    checkpoint.target_q1 = load_network(in, opt);
    checkpoint.target_q2 = load_network(in, opt);
    return checkpoint;
}

AgentCheckpoint checkpoint_from_result(const RunConfig& config, const TrainResult& result) {
    AgentCheckpoint checkpoint;
    checkpoint.env_spec = config.env;
    checkpoint.config_text = render_config(config);
    checkpoint.variant = config.agent.variant;
    checkpoint.seed = config.agent.seed;
    checkpoint.trained_steps = result.env_steps;
    checkpoint.temperature = result.temperature;
    checkpoint.actor = result.actor;
    checkpoint.q1 = result.q1;
    checkpoint.q2 = result.q2;
    checkpoint.target_q1 = result.target_q1;
    checkpoint.target_q2 = result.target_q2;
    checkpoint.actor_opt = result.actor_opt;
    checkpoint.q1_opt = result.q1_opt;
    checkpoint.q2_opt = result.q2_opt;
    return checkpoint;
}

}  // namespace dsac
