#include "dsac/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dsac/errors.hpp"

namespace dsac {
namespace {

std::string trim(const std::string& text) {
    auto begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double out = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw UsageError("config key \"" + key + "\" expects a number, got \"" + value + "\"");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        std::int64_t out = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw UsageError("config key \"" + key + "\" expects an integer, got \"" + value + "\"");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        std::uint64_t out = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw UsageError("config key \"" + key + "\" expects an unsigned integer, got \"" + value + "\"");
    }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    if (trim(value).empty()) return out;
    std::stringstream stream(value);
    std::string item;
    while (std::getline(stream, item, ',')) {
        out.push_back(static_cast<int>(parse_int(key, trim(item))));
    }
    return out;
}

std::string render_double(double value) {
    std::ostringstream out;
    out.precision(17);
    out << value;
    return out.str();
}

std::string render_int_list(const std::vector<int>& values) {
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
    return out.str();
}

}  // namespace

void AgentConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw UsageError("config: gamma must lie in [0, 1]");
    if (batch_size < 1) throw UsageError("config: batch_size must be >= 1");
    if (buffer_capacity < static_cast<std::size_t>(batch_size)) {
        throw UsageError("config: buffer_capacity must be >= batch_size");
    }
    for (int h : hidden_layers) {
        if (h < 1) throw UsageError("config: hidden layer width must be >= 1");
    }
    if (!(learning_rate > 0.0)) throw UsageError("config: learning_rate must be > 0");
    if (!(alpha_learning_rate >= 0.0)) throw UsageError("config: alpha_learning_rate must be >= 0");
    if (!(initial_alpha > 0.0)) throw UsageError("config: initial_alpha must be > 0");
    if (!(target_entropy_discount >= 0.0 && target_entropy_discount <= 1.0)) {
        throw UsageError("config: target_entropy_discount must lie in [0, 1]");
    }
    if (!(tau >= 0.0 && tau <= 1.0)) throw UsageError("config: tau must lie in [0, 1]");
    if (target_update_period < 1) throw UsageError("config: target_update_period must be >= 1");
    if (gradient_steps_per_env_step < 0) {
        throw UsageError("config: gradient_steps_per_env_step must be >= 0");
    }
    if (warmup_steps < 0) throw UsageError("config: warmup_steps must be >= 0");
}

void RunConfig::validate() const {
    agent.validate();
    if (env.empty()) throw UsageError("config: env must not be empty");
    if (total_steps < 1) throw UsageError("config: total_steps must be >= 1");
    if (eval_interval < 1) throw UsageError("config: eval_interval must be >= 1");
    if (eval_episodes < 1) throw UsageError("config: eval_episodes must be >= 1");
    if (checkpoint_interval < 0) throw UsageError("config: checkpoint_interval must be >= 0");
}

Variant parse_variant(const std::string& text) {
    if (text == "dsac") return Variant::Dsac;
    if (text == "dsac-m") return Variant::DsacMean;
    if (text == "dsac-v") return Variant::DsacVariance;
    throw UsageError("unknown variant \"" + text + "\" (expected dsac, dsac-m or dsac-v)");
}

CriticAggregation parse_aggregation(const std::string& text) {
    if (text == "min") return CriticAggregation::Min;
    if (text == "avg") return CriticAggregation::Average;
    throw UsageError("unknown aggregation \"" + text + "\" (expected min or avg)");
}

ConstraintSource parse_constraint_source(const std::string& text) {
    if (text == "online") return ConstraintSource::Online;
    if (text == "target") return ConstraintSource::Target;
    throw UsageError("unknown constraint_source \"" + text + "\" (expected online or target)");
}

RunConfig run_config_from_kv(const std::map<std::string, std::string>& kv) {
    RunConfig config;
    for (const auto& [key, value] : kv) {
        if (key == "variant") config.agent.variant = parse_variant(value);
        else if (key == "gamma") config.agent.gamma = parse_double(key, value);
        else if (key == "batch_size") config.agent.batch_size = static_cast<int>(parse_int(key, value));
        else if (key == "buffer_capacity") config.agent.buffer_capacity = static_cast<std::size_t>(parse_u64(key, value));
        else if (key == "hidden_layers") config.agent.hidden_layers = parse_int_list(key, value);
        else if (key == "learning_rate") config.agent.learning_rate = parse_double(key, value);
        else if (key == "alpha_learning_rate") config.agent.alpha_learning_rate = parse_double(key, value);
        else if (key == "initial_alpha") config.agent.initial_alpha = parse_double(key, value);
        else if (key == "target_entropy_discount") config.agent.target_entropy_discount = parse_double(key, value);
        else if (key == "aggregation") config.agent.aggregation = parse_aggregation(value);
        else if (key == "tau") config.agent.tau = parse_double(key, value);
        else if (key == "target_update_period") config.agent.target_update_period = static_cast<int>(parse_int(key, value));
        else if (key == "gradient_steps_per_env_step") config.agent.gradient_steps_per_env_step = static_cast<int>(parse_int(key, value));
        else if (key == "warmup_steps") config.agent.warmup_steps = static_cast<int>(parse_int(key, value));
        else if (key == "constraint_source") config.agent.constraint_source = parse_constraint_source(value);
        else if (key == "seed") config.agent.seed = parse_u64(key, value);
        else if (key == "env") config.env = value;
        else if (key == "total_steps") config.total_steps = parse_int(key, value);
        else if (key == "eval_interval") config.eval_interval = static_cast<int>(parse_int(key, value));
        else if (key == "eval_episodes") config.eval_episodes = static_cast<int>(parse_int(key, value));
        else if (key == "checkpoint_interval") config.checkpoint_interval = static_cast<int>(parse_int(key, value));
        else if (key == "optimizer") {
            if (value != "adam") throw UsageError("config: only the adam optimizer is supported");
        } else if (key == "activation") {
            if (value != "relu") throw UsageError("config: only the relu activation is supported");
        } else {
            throw UsageError("unknown config key \"" + key + "\"");
        }
    }
    config.validate();
    return config;
}

std::map<std::string, std::string> run_config_to_kv(const RunConfig& config) {
    std::map<std::string, std::string> kv;
    kv["variant"] = to_string(config.agent.variant);
    kv["gamma"] = render_double(config.agent.gamma);
    kv["batch_size"] = std::to_string(config.agent.batch_size);
    kv["buffer_capacity"] = std::to_string(config.agent.buffer_capacity);
    kv["hidden_layers"] = render_int_list(config.agent.hidden_layers);
    kv["learning_rate"] = render_double(config.agent.learning_rate);
    kv["alpha_learning_rate"] = render_double(config.agent.alpha_learning_rate);
    kv["initial_alpha"] = render_double(config.agent.initial_alpha);
    kv["target_entropy_discount"] = render_double(config.agent.target_entropy_discount);
    kv["aggregation"] = to_string(config.agent.aggregation);
    kv["tau"] = render_double(config.agent.tau);
    kv["target_update_period"] = std::to_string(config.agent.target_update_period);
    kv["gradient_steps_per_env_step"] = std::to_string(config.agent.gradient_steps_per_env_step);
    kv["warmup_steps"] = std::to_string(config.agent.warmup_steps);
    kv["constraint_source"] = to_string(config.agent.constraint_source);
    kv["seed"] = std::to_string(config.agent.seed);
    kv["env"] = config.env;
    kv["total_steps"] = std::to_string(config.total_steps);
    kv["eval_interval"] = std::to_string(config.eval_interval);
    kv["eval_episodes"] = std::to_string(config.eval_episodes);
    kv["checkpoint_interval"] = std::to_string(config.checkpoint_interval);
    kv["optimizer"] = "adam";
    kv["activation"] = "relu";
    return kv;
}

void apply_override(RunConfig& config, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw UsageError("override must be key=value, got \"" + assignment + "\"");
    }
    std::map<std::string, std::string> kv = run_config_to_kv(config);
    const std::string key = trim(assignment.substr(0, eq));
    kv[key] = trim(assignment.substr(eq + 1));
    config = run_config_from_kv(kv);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw UsageError("cannot open config file \"" + path + "\"");
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        auto eq = text.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": expected key = value";
            throw UsageError(msg.str());
        }
        kv[trim(text.substr(0, eq))] = trim(text.substr(eq + 1));
    }
    return run_config_from_kv(kv);
}

std::string render_config(const RunConfig& config) {
    std::ostringstream out;
    for (const auto& [key, value] : run_config_to_kv(config)) {
        out << key << " = " << value << "\n";
    }
    return out.str();
}

}  // namespace dsac
