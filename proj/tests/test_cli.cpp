#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cli.hpp"
#include "dsac/checkpoint.hpp"
#include "dsac/config.hpp"
#include "dsac/errors.hpp"
#include "dsac/train.hpp"

#include <json.hpp>

using namespace dsac;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "dsac_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct CaptureStdout {
    CaptureStdout() : old_(std::cout.rdbuf(buffer_.rdbuf())) {}
    ~CaptureStdout() { std::cout.rdbuf(old_); }
    std::string text() const { return buffer_.str(); }

private:
    std::stringstream buffer_;
    std::streambuf* old_;
};

RunConfig tiny_config() {
    RunConfig config;
    config.env = "chain:n=4,slip=0.1";
    config.total_steps = 600;
    config.eval_interval = 300;
    config.eval_episodes = 3;
    config.agent.hidden_layers = {8};
    config.agent.warmup_steps = 100;
    config.agent.target_update_period = 50;
    config.agent.buffer_capacity = 4096;
    config.agent.initial_alpha = 0.01;
    return config;
}

}  // namespace

TEST_CASE("config round-trips through its key-value form") {
    RunConfig config = tiny_config();
    config.agent.variant = Variant::DsacVariance;
    config.agent.aggregation = CriticAggregation::Min;
    config.agent.seed = 42;
    config.agent.gamma = 0.95;

    RunConfig back = run_config_from_kv(run_config_to_kv(config));
    CHECK(run_config_to_kv(back) == run_config_to_kv(config));
    CHECK(back.agent.variant == Variant::DsacVariance);
    CHECK(back.agent.gamma == 0.95);
    CHECK(back.env == config.env);
}

TEST_CASE("every published hyperparameter appears in the config snapshot") {
    auto kv = run_config_to_kv(RunConfig{});
    for (const char* key :
         {"learning_rate", "optimizer", "batch_size", "gamma", "buffer_capacity", "hidden_layers",
          "activation", "tau", "target_entropy_discount"}) {
        CAPTURE(key);
        CHECK(kv.count(key) == 1);
    }
    CHECK(kv["optimizer"] == "adam");
    CHECK(kv["activation"] == "relu");
    CHECK(kv["learning_rate"] == "0.00029999999999999997");
    CHECK(kv["batch_size"] == "64");
    CHECK(kv["gamma"] == "0.98999999999999999");
    CHECK(kv["buffer_capacity"] == "1000000");
    CHECK(kv["hidden_layers"] == "512,512");
    CHECK(kv["tau"] == "1");
    CHECK(kv["target_entropy_discount"] == "0.97999999999999998");
}

TEST_CASE("config files load with comments and reject unknown keys by name") {
    fs::path dir = scratch_dir("config");
    fs::path good = dir / "good.cfg";
    std::ofstream(good) << "# toy setup\nvariant = dsac-m\nenv = chain:n=6,slip=0.2\n"
                           "total_steps = 1234\nhidden_layers = 32,16\n";
    RunConfig config = load_run_config(good.string());
    CHECK(config.agent.variant == Variant::DsacMean);
    CHECK(config.total_steps == 1234);
    CHECK(config.agent.hidden_layers == std::vector<int>{32, 16});

    fs::path bad = dir / "bad.cfg";
    std::ofstream(bad) << "variant = dsac\nlerning_rate = 1\n";
    try {
        load_run_config(bad.string());
        FAIL("expected UsageError");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("lerning_rate") != std::string::npos);
    }

    try {
        load_run_config((dir / "missing.cfg").string());
        FAIL("expected UsageError");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("missing.cfg") != std::string::npos);
    }
}

TEST_CASE("overrides parse and validate") {
    RunConfig config;
    apply_override(config, "variant=dsac-v");
    apply_override(config, "eval_episodes = 7");
    CHECK(config.agent.variant == Variant::DsacVariance);
    CHECK(config.eval_episodes == 7);
    CHECK_THROWS_AS(apply_override(config, "nonsense=1"), UsageError);
    CHECK_THROWS_AS(apply_override(config, "gamma=2.0"), UsageError);
    CHECK_THROWS_AS(apply_override(config, "gamma"), UsageError);
}

TEST_CASE("seed expansion: counts and explicit lists") {
    CHECK(cli::expand_seeds("", 5) == std::vector<std::uint64_t>{5});
    CHECK(cli::expand_seeds("3", 10) == std::vector<std::uint64_t>{10, 11, 12});
    CHECK(cli::expand_seeds("4,9,2", 0) == std::vector<std::uint64_t>{4, 9, 2});
    CHECK_THROWS_AS(cli::expand_seeds("zero", 0), UsageError);
    CHECK_THROWS_AS(cli::expand_seeds("0", 0), UsageError);
}

TEST_CASE("train command writes a manifest and per-seed metrics, deterministically") {
    fs::path dir = scratch_dir("train");
    std::vector<std::string> args{
        "train", "--env", "chain:n=4,slip=0.1", "--steps", "600", "--seeds", "3",
        "--out", dir.string(), "--variant", "dsac-m",
        "--set", "hidden_layers=8", "--set", "warmup_steps=100",
        "--set", "eval_interval=300", "--set", "eval_episodes=3",
        "--set", "target_update_period=50", "--set", "buffer_capacity=4096",
        "--set", "initial_alpha=0.01"};
    {
        CaptureStdout capture;
        CHECK(cli::run(args) == 0);
    }

    CHECK(fs::exists(dir / "manifest.json"));
    std::string manifest = slurp(dir / "manifest.json");
    CHECK(manifest.find("\"optimizer\": \"adam\"") != std::string::npos);
    CHECK(manifest.find("\"target_entropy_discount\"") != std::string::npos);

    std::vector<std::string> first_run;
    for (int seed = 0; seed < 3; ++seed) {
        fs::path jsonl = dir / ("metrics_dsac-m_seed" + std::to_string(seed) + ".jsonl");
        fs::path csv = dir / ("metrics_dsac-m_seed" + std::to_string(seed) + ".csv");
        REQUIRE(fs::exists(jsonl));
        REQUIRE(fs::exists(csv));
        std::string text = slurp(jsonl);
        first_run.push_back(text);
        // last record is the final step
        CHECK(text.find("\"step\":600") != std::string::npos);
        CHECK(slurp(csv).find("step,variant,seed,") == 0);
        CHECK(fs::exists(dir / ("checkpoint_dsac-m_seed" + std::to_string(seed) + ".ckpt")));
    }

    {
        CaptureStdout capture;
        CHECK(cli::run(args) == 0);
    }
    for (int seed = 0; seed < 3; ++seed) {
        fs::path jsonl = dir / ("metrics_dsac-m_seed" + std::to_string(seed) + ".jsonl");
        CHECK(slurp(jsonl) == first_run[static_cast<std::size_t>(seed)]);
    }

    // manifest config snapshot reloads to the identical validated config
    RunConfig base = tiny_config();
    std::map<std::string, std::string> kv = run_config_to_kv(base);
    RunConfig reloaded = run_config_from_kv(kv);
    CHECK(run_config_to_kv(reloaded) == kv);
}

TEST_CASE("eval command reproduces the final training record and honors shifts") {
    fs::path dir = scratch_dir("eval");
    RunConfig config = tiny_config();
    config.agent.seed = 2;
    TrainResult result = train(config);
    const double final_mean = result.records.back().eval_return_mean;

    fs::path ckpt = dir / "agent.ckpt";
    save_checkpoint(ckpt.string(), checkpoint_from_result(config, result));

    auto run_eval = [&](std::vector<std::string> extra) {
        std::vector<std::string> args{"eval", "--checkpoint", ckpt.string(), "--episodes",
                                      std::to_string(config.eval_episodes)};
        for (std::string& arg : extra) args.push_back(arg);
        CaptureStdout capture;
        const int code = cli::run(args);
        return std::make_pair(code, capture.text());
    };

    // same episode seeds as training's eval stream: exact agreement
    auto [code, text] = run_eval({});
    CHECK(code == 0);
    std::ostringstream expected;
    expected << "\"return_mean\":" << format_double(final_mean);
    CHECK(text.find(expected.str()) != std::string::npos);

    // magnitude-0 shift is indistinguishable from no shift
    auto [code0, text0] = run_eval({"--shift", "speckle:0:seed=9"});
    CHECK(code0 == 0);
    CHECK(text0.find(expected.str()) != std::string::npos);

    // a real corruption changes the record but not its validity
    auto [code1, text1] = run_eval({"--shift", "speckle:0.8:seed=9"});
    CHECK(code1 == 0);
    CHECK(text1.find("\"shift\":\"speckle:0.8:seed=9\"") != std::string::npos);

    // --out appends one JSONL record per invocation
    fs::path log = dir / "eval_log.jsonl";
    auto [code_a, text_a] = run_eval({"--out", log.string()});
    auto [code_b, text_b] = run_eval({"--out", log.string(), "--shift", "blur:0.4"});
    CHECK(code_a == 0);
    CHECK(code_b == 0);
    std::string appended = slurp(log);
    CHECK(std::count(appended.begin(), appended.end(), '\n') == 2);
    CHECK(appended.find("\"shift\":\"blur:0.4:seed=0\"") != std::string::npos);

    // dimension mismatch: nonzero exit naming both shapes
    std::vector<std::string> bad{"eval", "--checkpoint", ckpt.string(), "--env", "chain:n=7"};
    CHECK(cli::run(bad) == 2);
}

TEST_CASE("solve command handles the worked examples") {
    {
        CaptureStdout capture;
        CHECK(cli::run({"solve", "--q", "5,5,5", "--alpha", "1", "--mean", "--target", "5"}) == 0);
        CHECK(capture.text().find("status     = degenerate") != std::string::npos);
        CHECK(capture.text().find("lambda     = 0.0") != std::string::npos);
    }
    {
        CaptureStdout capture;
        CHECK(cli::run({"solve", "--q", "1,2", "--alpha", "1", "--mean", "--target", "1.5"}) == 0);
        CHECK(capture.text().find("status     = clipped_high") != std::string::npos);
        CHECK(capture.text().find("lambda     = 1.0") != std::string::npos);
    }
    {
        CaptureStdout capture;
        CHECK(cli::run({"solve", "--q", "1,2", "--alpha", "1", "--mean", "--target",
                        "1.7310585786300049"}) == 0);
        CHECK(capture.text().find("status     = converged") != std::string::npos);
    }
    CHECK(cli::run({"solve", "--q", "1,2", "--target", "1.5"}) == 2);  // no kind flag
    CHECK(cli::run({"solve", "--q", "1,x", "--mean", "--target", "1.5"}) == 2);
    CHECK(cli::run({"solve", "--q", "1,2", "--variance", "--target", "0.5"}) == 2);  // center missing
}

TEST_CASE("train command rejects a missing config file with exit code 2") {
    CHECK(cli::run({"train", "--config", "/nonexistent/path.cfg"}) == 2);
}

TEST_CASE("a numerical abort during training exits with code 3") {
    fs::path dir = scratch_dir("abort");
    CaptureStdout capture;
    const int code = cli::run({"train", "--env", "chain:n=4,slip=0.1", "--steps", "400",
                               "--out", dir.string(), "--set", "warmup_steps=50",
                               "--set", "hidden_layers=8", "--set", "learning_rate=1e200",
                               "--set", "eval_interval=200", "--set", "eval_episodes=2",
                               "--set", "buffer_capacity=1024", "--set", "initial_alpha=0.01"});
    CHECK(code == 3);
}

TEST_CASE("the manifest config snapshot reloads to the identical config") {
    fs::path dir = scratch_dir("manifest");
    {
        CaptureStdout capture;
        REQUIRE(cli::run({"train", "--env", "chain:n=4,slip=0.1", "--steps", "300",
                          "--variant", "dsac-v", "--aggregation", "min",
                          "--out", dir.string(), "--set", "hidden_layers=8",
                          "--set", "warmup_steps=100", "--set", "eval_interval=300",
                          "--set", "eval_episodes=2", "--set", "buffer_capacity=1024",
                          "--set", "initial_alpha=0.01",
                          "--set", "target_update_period=50"}) == 0);
    }
    // re-parse the snapshot the manifest recorded and compare key-for-key
    std::string manifest = slurp(dir / "manifest.json");
    auto json = nlohmann::json::parse(manifest);
    std::map<std::string, std::string> kv;
    for (auto it = json["config"].begin(); it != json["config"].end(); ++it) {
        kv[it.key()] = it.value().get<std::string>();
    }
    RunConfig reloaded = run_config_from_kv(kv);
    CHECK(run_config_to_kv(reloaded) == kv);
    CHECK(reloaded.agent.variant == Variant::DsacVariance);
    CHECK(reloaded.agent.aggregation == CriticAggregation::Min);
    CHECK(reloaded.env == "chain:n=4,slip=0.1");
}

TEST_CASE("speckle sweep on a trained grid agent (logged, not asserted)") {
    RunConfig config;
    config.env = "grid:w=4,h=4,slip=0,obs=onehot";
    config.total_steps = 30000;
    config.eval_interval = 10000;
    config.eval_episodes = 10;
    config.agent.hidden_layers = {32};
    config.agent.warmup_steps = 500;
    config.agent.target_update_period = 250;
    config.agent.initial_alpha = 0.005;
    config.agent.seed = 3;
    TrainResult result = train(config);
    MESSAGE("grid agent final eval return " << result.records.back().eval_return_mean);

    std::ostringstream sweep;
    for (double magnitude : {0.0, 0.3, 0.9}) {
        ShiftedEnv env(make_env(config.env), ShiftSpec{ShiftKind::Speckle, magnitude, 7});
        EvalStats stats = evaluate(result.actor, env, 20, EvalMode::Greedy, 77);
        sweep << " speckle:" << magnitude << " -> " << stats.mean;
    }
    MESSAGE("shift sweep" << sweep.str());
    CHECK(true);  // the sweep is informational; monotonicity is a soft expectation
}
