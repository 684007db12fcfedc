#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "dsac/checkpoint.hpp"
#include "dsac/config.hpp"
#include "dsac/env.hpp"
#include "dsac/errors.hpp"
#include "dsac/maxent.hpp"
#include "dsac/metrics.hpp"
#include "dsac/train.hpp"

namespace dsac::cli {
namespace {

int log_level() {
    const char* env = std::getenv("DSAC_LOG");
    if (env == nullptr) return 1;
    try {
        return std::stoi(env);
    } catch (const std::exception&) {
        return 1;
    }
}

void info(const std::string& message) {
    if (log_level() >= 1) std::cerr << message << "\n";
}

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

struct TrainArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string variant;
    std::string env;
    std::string aggregation;
    std::int64_t steps = -1;
    std::string seeds;
    std::string out_dir = "runs";
};

struct EvalArgs {
    std::string checkpoint_path;
    std::string env;
    std::string shift;
    std::string out_path;
    int episodes = 10;
    std::optional<std::uint64_t> seed;
    bool stochastic = false;
};

struct SolveArgs {
    std::string q_text;
    double alpha = 1.0;
    bool mean = false;
    bool variance = false;
    double target = 0.0;
    std::optional<double> center;
};

RunConfig assemble_config(const TrainArgs& args) {
    RunConfig config;
    if (!args.config_path.empty()) config = load_run_config(args.config_path);
    for (const std::string& assignment : args.overrides) apply_override(config, assignment);
    if (!args.variant.empty()) apply_override(config, "variant=" + args.variant);
    if (!args.env.empty()) apply_override(config, "env=" + args.env);
    if (!args.aggregation.empty()) apply_override(config, "aggregation=" + args.aggregation);
    if (args.steps >= 0) apply_override(config, "total_steps=" + std::to_string(args.steps));
    config.validate();
    return config;
}

void write_manifest(const std::filesystem::path& out_dir, const RunConfig& config,
                    const std::vector<std::uint64_t>& seeds) {
    nlohmann::ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["command"] = "train";
    manifest["created_at"] = timestamp_utc();
    nlohmann::ordered_json config_json;
    for (const auto& [key, value] : run_config_to_kv(config)) config_json[key] = value;
    manifest["config"] = config_json;
    manifest["seeds"] = seeds;
    nlohmann::ordered_json artifacts;
    std::vector<std::string> jsonl, csv, checkpoints;
    const std::string variant = to_string(config.agent.variant);
    for (std::uint64_t seed : seeds) {
        jsonl.push_back(metrics_basename(variant, seed) + ".jsonl");
        csv.push_back(metrics_basename(variant, seed) + ".csv");
        checkpoints.push_back(checkpoint_basename(variant, seed) + ".ckpt");
    }
    artifacts["metrics_jsonl"] = jsonl;
    artifacts["metrics_csv"] = csv;
    artifacts["checkpoints"] = checkpoints;
    manifest["artifacts"] = artifacts;

    const std::filesystem::path path = out_dir / "manifest.json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw UsageError("cannot write manifest \"" + path.string() + "\"");
    out << manifest.dump(2) << "\n";
}

int cmd_train(const TrainArgs& args) {
    RunConfig base = assemble_config(args);
    const std::vector<std::uint64_t> seeds = expand_seeds(args.seeds, base.agent.seed);
    const std::filesystem::path out_dir(args.out_dir);
    std::filesystem::create_directories(out_dir);
    write_manifest(out_dir, base, seeds);

    const std::string variant = to_string(base.agent.variant);
    for (std::uint64_t seed : seeds) {
        RunConfig config = base;
        config.agent.seed = seed;
        const std::string stem = metrics_basename(variant, seed);
        MetricsWriter writer((out_dir / (stem + ".jsonl")).string(),
                             (out_dir / (stem + ".csv")).string());
        const std::string checkpoint_path =
            (out_dir / (checkpoint_basename(variant, seed) + ".ckpt")).string();

        info("train: " + variant + " seed " + std::to_string(seed) + " on " + config.env);
        TrainResult result = train(
            config,
            [&](const MetricsRecord& record) {
                writer.append(record);
                if (log_level() >= 2) std::cerr << "  " << to_jsonl(record) << "\n";
            },
            [&](std::int64_t step, const TrainResult& snapshot) {
                AgentCheckpoint checkpoint = checkpoint_from_result(config, snapshot);
                checkpoint.trained_steps = step;
                save_checkpoint(checkpoint_path, checkpoint);
            });

        const MetricsRecord& last = result.records.back();
        std::cout << "trained " << variant << " seed " << seed << ": steps " << result.env_steps
                  << ", eval return " << format_double(last.eval_return_mean) << " +- "
                  << format_double(last.eval_return_std) << ", alpha "
                  << format_double(last.alpha) << "\n";
    }
    return 0;
}

int cmd_eval(const EvalArgs& args) {
    AgentCheckpoint checkpoint = load_checkpoint(args.checkpoint_path);
    const std::string env_spec = args.env.empty() ? checkpoint.env_spec : args.env;
    std::unique_ptr<Env> env = make_env(env_spec);

    const EnvDescription& desc = env->description();
    if (desc.observation_dim != checkpoint.actor.spec.input_dim ||
        desc.action_count != checkpoint.actor.spec.output_dim) {
        std::ostringstream msg;
        msg << "checkpoint/env mismatch: checkpoint actor is " << checkpoint.actor.spec.input_dim
            << " obs x " << checkpoint.actor.spec.output_dim << " actions, env \"" << env_spec
            << "\" is " << desc.observation_dim << " obs x " << desc.action_count << " actions";
        throw UsageError(msg.str());
    }

    std::string shift_text = "none";
    if (!args.shift.empty()) {
        ShiftSpec shift = parse_shift(args.shift);
        shift_text = to_string(shift);
        env = std::make_unique<ShiftedEnv>(std::move(env), shift);
    }

    const std::uint64_t seed = args.seed ? *args.seed : eval_seed_base(checkpoint.seed);
    EvalStats stats = evaluate(checkpoint.actor, *env, args.episodes,
                               args.stochastic ? EvalMode::Stochastic : EvalMode::Greedy, seed);

    nlohmann::ordered_json record;
    record["return_mean"] = stats.mean;
    record["return_std"] = stats.stddev;
    record["episodes"] = args.episodes;
    record["shift"] = shift_text;
    record["env"] = env_spec;
    record["checkpoint"] = args.checkpoint_path;
    record["mode"] = args.stochastic ? "stochastic" : "greedy";
    record["seed"] = seed;
    std::cout << record.dump() << "\n";

    if (!args.out_path.empty()) {
        std::ofstream out(args.out_path, std::ios::app);
        if (!out) throw UsageError("cannot open eval log \"" + args.out_path + "\"");
        out << record.dump() << "\n";
    }
    return 0;
}

int cmd_solve(const SolveArgs& args) {
    if (args.mean == args.variance) {
        throw UsageError("solve: pass exactly one of --mean or --variance");
    }
    std::vector<double> q;
    std::stringstream stream(args.q_text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        try {
            std::size_t used = 0;
            q.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("solve: q entry is not a number: \"" + item + "\"");
        }
    }
    if (q.empty()) throw UsageError("solve: --q must list at least one value");

    QVector qv{q, args.alpha};
    ConstraintTarget ct;
    ct.kind = args.mean ? ConstraintKind::Mean : ConstraintKind::Variance;
    ct.target = args.target;
    if (ct.kind == ConstraintKind::Variance) {
        if (!args.center) throw UsageError("solve: --variance requires --center");
        ct.center = *args.center;
    }

    LagrangeSolution solution = solve_lambda(qv, ct);
    PolicyDistribution policy = ct.kind == ConstraintKind::Mean
                                    ? mean_constrained_policy(qv, solution.lambda)
                                    : variance_constrained_policy(qv, solution.lambda, ct.center);

    std::cout << "lambda     = " << format_double(solution.lambda) << "\n";
    std::cout << "status     = " << to_string(solution.status) << "\n";
    std::cout << "residual   = " << format_double(solution.residual) << "\n";
    std::cout << "iterations = " << solution.iterations << "\n";
    std::cout << "policy     = [";
    for (int i = 0; i < policy.size(); ++i) {
        std::cout << (i ? ", " : "") << format_double(policy[i]);
    }
    std::cout << "]\n";
    return 0;
}

}  // namespace

std::vector<std::uint64_t> expand_seeds(const std::string& text, std::uint64_t base_seed) {
    if (text.empty()) return {base_seed};
    std::vector<std::uint64_t> seeds;
    if (text.find(',') != std::string::npos) {
        std::stringstream stream(text);
        std::string item;
        while (std::getline(stream, item, ',')) {
            try {
                seeds.push_back(std::stoull(item));
            } catch (const std::exception&) {
                throw UsageError("--seeds entry is not an integer: \"" + item + "\"");
            }
        }
        return seeds;
    }
    std::uint64_t count = 0;
    try {
        count = std::stoull(text);
    } catch (const std::exception&) {
        throw UsageError("--seeds must be a count or a comma list, got \"" + text + "\"");
    }
    if (count == 0) throw UsageError("--seeds count must be >= 1");
    for (std::uint64_t i = 0; i < count; ++i) seeds.push_back(base_seed + i);
    return seeds;
}

std::string metrics_basename(const std::string& variant, std::uint64_t seed) {
    return "metrics_" + variant + "_seed" + std::to_string(seed);
}

std::string checkpoint_basename(const std::string& variant, std::uint64_t seed) {
    return "checkpoint_" + variant + "_seed" + std::to_string(seed);
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"Constrained discrete soft actor-critic trainer"};
    app.require_subcommand(1);

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "Train one or more agents");
    train_cmd->add_option("--config", train_args.config_path, "Flat key-value config file");
    train_cmd->add_option("--set", train_args.overrides, "Override a config key (key=value)");
    train_cmd->add_option("--variant", train_args.variant, "dsac | dsac-m | dsac-v");
    train_cmd->add_option("--env", train_args.env, "Env spec, e.g. chain:n=10,slip=0.1");
    train_cmd->add_option("--steps", train_args.steps, "Total environment steps");
    train_cmd->add_option("--seeds", train_args.seeds, "Seed count or comma list");
    train_cmd->add_option("--out", train_args.out_dir, "Output directory");
    train_cmd->add_option("--aggregation", train_args.aggregation, "min | avg");

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint_path, "Checkpoint file")->required();
    eval_cmd->add_option("--env", eval_args.env, "Env spec (defaults to the checkpoint's)");
    eval_cmd->add_option("--shift", eval_args.shift, "Shift spec, e.g. speckle:0.3:seed=7");
    eval_cmd->add_option("--episodes", eval_args.episodes, "Episode count");
    eval_cmd->add_option("--out", eval_args.out_path, "Append the summary record to this JSONL file");
    std::int64_t eval_seed = -1;
    eval_cmd->add_option("--seed", eval_seed, "Evaluation seed (defaults to the training eval seed)");
    eval_cmd->add_flag("--stochastic", eval_args.stochastic, "Sample actions instead of argmax");

    SolveArgs solve_args;
    CLI::App* solve_cmd = app.add_subcommand("solve", "Solve a constraint multiplier");
    solve_cmd->add_option("--q", solve_args.q_text, "Comma list of action values")->required();
    solve_cmd->add_option("--alpha", solve_args.alpha, "Temperature");
    solve_cmd->add_flag("--mean", solve_args.mean, "Mean constraint");
    solve_cmd->add_flag("--variance", solve_args.variance, "Variance constraint");
    solve_cmd->add_option("--target", solve_args.target, "Constraint target")->required();
    double center = 0.0;
    CLI::Option* center_opt = solve_cmd->add_option("--center", center, "Deviation center (variance)");

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (eval_cmd->parsed()) {
            if (eval_seed >= 0) eval_args.seed = static_cast<std::uint64_t>(eval_seed);
            return cmd_eval(eval_args);
        }
        if (solve_cmd->parsed()) {
            if (center_opt->count() > 0) solve_args.center = center;
            return cmd_solve(solve_args);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

}  // namespace dsac::cli
