#include "dsac/env.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "dsac/errors.hpp"
#include "dsac/rng.hpp"

namespace dsac {
namespace {

// Environment backed by a TabularMDP with a pluggable observation encoding.
// Emitted rewards may be noisy around the table's expectation (bandit).
class TabularEnv : public Env {
public:
    TabularEnv(TabularMDP mdp, EnvDescription desc)
        : mdp_(std::move(mdp)), desc_(std::move(desc)), rng_(0) {
        mdp_.validate();
    }

    const EnvDescription& description() const override { return desc_; }
    const TabularMDP* tabular() const override { return &mdp_; }

    std::vector<double> reset(std::uint64_t seed) override {
        rng_ = Rng(mix_seed(seed, 0x656e76ull));
        state_ = sample_initial();
        steps_ = 0;
        active_ = true;
        return encode(state_);
    }

    StepResult step(int action) override {
        if (!active_) throw UsageError("env step: episode is finished, reset first");
        if (action < 0 || action >= mdp_.n_actions) {
            std::ostringstream msg;
            msg << "env step: action " << action << " out of range [0, " << mdp_.n_actions << ")";
            throw UsageError(msg.str());
        }
        const int s = state_;
        const int s2 = sample_next(s, action);
        state_ = s2;
        steps_ += 1;

        StepResult result;
        result.reward = emit_reward(s, action, s2);
        result.terminal = mdp_.terminal[static_cast<std::size_t>(s2)] != 0;
        result.truncated = !result.terminal && steps_ >= desc_.max_episode_steps;
        result.obs = encode(s2);
        if (result.terminal || result.truncated) active_ = false;
        return result;
    }

protected:
    virtual std::vector<double> encode(int state) const {
        std::vector<double> obs(static_cast<std::size_t>(desc_.observation_dim), 0.0);
        obs[static_cast<std::size_t>(state)] = 1.0;
        return obs;
    }

    // Default: the realized reward equals the (s, a, s')-conditional rule that
    // averages to the table entry. Built-ins override where rewards depend on
    // the landing state or carry noise.
    virtual double emit_reward(int s, int a, int /*s2*/) { return mdp_.r(s, a); }

    int sample_initial() {
        double point = rng_.uniform();
        double cutoff = 0.0;
        for (int s = 0; s < mdp_.n_states; ++s) {
            cutoff += mdp_.initial[static_cast<std::size_t>(s)];
            if (point < cutoff) return s;
        }
        return mdp_.n_states - 1;
    }

    int sample_next(int s, int a) {
        double point = rng_.uniform();
        double cutoff = 0.0;
        for (int s2 = 0; s2 < mdp_.n_states; ++s2) {
            cutoff += mdp_.t(s, a, s2);
            if (point < cutoff) return s2;
        }
        return mdp_.n_states - 1;
    }

    TabularMDP mdp_;
    EnvDescription desc_;
    Rng rng_;
    int state_ = 0;
    int steps_ = 0;
    bool active_ = false;
};

class ChainEnv : public TabularEnv {
public:
    ChainEnv(int n, double slip, int max_steps)
        : TabularEnv(build(n, slip), describe(n, slip, max_steps)), n_(n) {}

protected:
    double emit_reward(int /*s*/, int /*a*/, int s2) override {
        return s2 == n_ - 1 ? 1.0 : 0.0;
    }

private:
    static TabularMDP build(int n, double slip) {
        if (n < 2) throw UsageError("chain env: need at least 2 states");
        if (!(slip >= 0.0 && slip <= 1.0)) throw UsageError("chain env: slip must lie in [0, 1]");
        TabularMDP mdp = make_tabular(n, 2);
        auto clampState = [n](int s) { return std::clamp(s, 0, n - 1); };
        for (int s = 0; s < n; ++s) {
            for (int a = 0; a < 2; ++a) {
                const int dir = (a == 1) ? 1 : -1;
                const int intended = clampState(s + dir);
                const int slipped = clampState(s - dir);
                mdp.t(s, a, intended) += 1.0 - slip;
                mdp.t(s, a, slipped) += slip;
                mdp.r(s, a) = (1.0 - slip) * (intended == n - 1 ? 1.0 : 0.0) +
                              slip * (slipped == n - 1 ? 1.0 : 0.0);
            }
        }
        mdp.terminal[static_cast<std::size_t>(n - 1)] = 1;
        mdp.initial[0] = 1.0;
        return mdp;
    }

    static EnvDescription describe(int n, double slip, int max_steps) {
        std::ostringstream name;
        name << "chain:n=" << n << ",slip=" << slip;
        return {n, 2, max_steps > 0 ? max_steps : 10 * n, name.str()};
    }

    int n_;
};

class GridEnv : public TabularEnv {
public:
    GridEnv(int w, int h, double slip, GridObs obs_mode, int max_steps)
        : TabularEnv(build(w, h, slip), describe(w, h, slip, obs_mode, max_steps)),
          w_(w), h_(h), obs_mode_(obs_mode) {}

protected:
    std::vector<double> encode(int state) const override {
        std::vector<double> obs(static_cast<std::size_t>(desc_.observation_dim), 0.0);
        if (obs_mode_ == GridObs::Intensity) {
            obs[static_cast<std::size_t>(goal_cell(w_, h_))] = 0.5;
            int pit = pit_cell(w_, h_);
            if (pit >= 0) obs[static_cast<std::size_t>(pit)] = -0.5;
        }
        obs[static_cast<std::size_t>(state)] = 1.0;
        return obs;
    }

    double emit_reward(int /*s*/, int /*a*/, int s2) override {
        if (s2 == goal_cell(w_, h_)) return 1.0;
        if (s2 == pit_cell(w_, h_)) return -1.0;
        return 0.0;
    }

private:
    static int goal_cell(int w, int h) { return (h - 1) * w + (w - 1); }
    static int pit_cell(int w, int h) {
        if (w < 3 || h < 3) return -1;
        return (h / 2) * w + (w / 2);
    }

    static TabularMDP build(int w, int h, double slip) {
        if (w < 2 || h < 2) throw UsageError("grid env: need at least a 2x2 grid");
        if (!(slip >= 0.0 && slip <= 1.0)) throw UsageError("grid env: slip must lie in [0, 1]");
        const int n = w * h;
        TabularMDP mdp = make_tabular(n, 4);
        const int goal = goal_cell(w, h);
        const int pit = pit_cell(w, h);
        const int dx[4] = {0, 0, -1, 1};  // up, down, left, right
        const int dy[4] = {-1, 1, 0, 0};
        auto move = [&](int s, int dir) {
            int x = s % w, y = s / w;
            int nx = std::clamp(x + dx[dir], 0, w - 1);
            int ny = std::clamp(y + dy[dir], 0, h - 1);
            return ny * w + nx;
        };
        auto landing_reward = [&](int s2) {
            if (s2 == goal) return 1.0;
            if (s2 == pit) return -1.0;
            return 0.0;
        };
        for (int s = 0; s < n; ++s) {
            for (int a = 0; a < 4; ++a) {
                mdp.t(s, a, move(s, a)) += 1.0 - slip;
                for (int d = 0; d < 4; ++d) {
                    if (d == a) continue;
                    mdp.t(s, a, move(s, d)) += slip / 3.0;
                }
                double expected = (1.0 - slip) * landing_reward(move(s, a));
                for (int d = 0; d < 4; ++d) {
                    if (d == a) continue;
                    expected += (slip / 3.0) * landing_reward(move(s, d));
                }
                mdp.r(s, a) = expected;
            }
        }
        mdp.terminal[static_cast<std::size_t>(goal)] = 1;
        if (pit >= 0) mdp.terminal[static_cast<std::size_t>(pit)] = 1;
        mdp.initial[0] = 1.0;
        return mdp;
    }

    static EnvDescription describe(int w, int h, double slip, GridObs obs_mode, int max_steps) {
        std::ostringstream name;
        name << "grid:w=" << w << ",h=" << h << ",slip=" << slip
             << ",obs=" << (obs_mode == GridObs::OneHot ? "onehot" : "intensity");
        return {w * h, 4, max_steps > 0 ? max_steps : 100, name.str()};
    }

    int w_;
    int h_;
    GridObs obs_mode_;
};

class BanditEnv : public TabularEnv {
public:
    BanditEnv(int k, double noise_std)
        : TabularEnv(build(k), describe(k, noise_std)), noise_std_(noise_std) {}

protected:
    std::vector<double> encode(int /*state*/) const override { return {1.0}; }

    double emit_reward(int s, int a, int /*s2*/) override {
        double mean = mdp_.r(s, a);
        return noise_std_ > 0.0 ? mean + noise_std_ * rng_.gaussian() : mean;
    }

private:
    static TabularMDP build(int k) {
        if (k < 2) throw UsageError("bandit env: need at least 2 arms");
        TabularMDP mdp = make_tabular(2, k);
        for (int a = 0; a < k; ++a) {
            mdp.t(0, a, 1) = 1.0;
            mdp.t(1, a, 1) = 1.0;
            mdp.r(0, a) = static_cast<double>(a) / static_cast<double>(k - 1);
        }
        mdp.terminal[1] = 1;
        mdp.initial[0] = 1.0;
        return mdp;
    }

    static EnvDescription describe(int k, double noise_std) {
        std::ostringstream name;
        name << "bandit:k=" << k << ",noise=" << noise_std;
        return {1, k, 1, name.str()};
    }

    double noise_std_;
};

std::map<std::string, std::string> parse_kv_args(const std::string& args, const std::string& context) {
    std::map<std::string, std::string> kv;
    if (args.empty()) return kv;
    std::stringstream stream(args);
    std::string item;
    while (std::getline(stream, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw UsageError(context + ": expected key=value, got \"" + item + "\"");
        }
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return kv;
}

int take_int(std::map<std::string, std::string>& kv, const std::string& key, std::optional<int> fallback,
             const std::string& context) {
    auto it = kv.find(key);
    if (it == kv.end()) {
        if (fallback) return *fallback;
        throw UsageError(context + ": missing required key \"" + key + "\"");
    }
    int value = 0;
    try {
        std::size_t used = 0;
        value = std::stoi(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
    } catch (const std::exception&) {
        throw UsageError(context + ": key \"" + key + "\" is not an integer: \"" + it->second + "\"");
    }
    kv.erase(it);
    return value;
}

double take_double(std::map<std::string, std::string>& kv, const std::string& key, double fallback,
                   const std::string& context) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    double value = 0.0;
    try {
        std::size_t used = 0;
        value = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
    } catch (const std::exception&) {
        throw UsageError(context + ": key \"" + key + "\" is not a number: \"" + it->second + "\"");
    }
    kv.erase(it);
    return value;
}

void reject_leftovers(const std::map<std::string, std::string>& kv, const std::string& context) {
    if (!kv.empty()) throw UsageError(context + ": unknown key \"" + kv.begin()->first + "\"");
}

}  // namespace

std::unique_ptr<Env> make_chain_env(int n, double slip, int max_episode_steps) {
    return std::make_unique<ChainEnv>(n, slip, max_episode_steps);
}

std::unique_ptr<Env> make_grid_env(int w, int h, double slip, GridObs obs, int max_episode_steps) {
    return std::make_unique<GridEnv>(w, h, slip, obs, max_episode_steps);
}

std::unique_ptr<Env> make_bandit_env(int k, double noise_std) {
    return std::make_unique<BanditEnv>(k, noise_std);
}

std::unique_ptr<Env> make_env(const std::string& spec) {
    auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
    const std::string context = "env spec \"" + spec + "\"";
    auto kv = parse_kv_args(args, context);
    if (name == "chain") {
        int n = take_int(kv, "n", std::nullopt, context);
        double slip = take_double(kv, "slip", 0.0, context);
        int max_steps = take_int(kv, "max_steps", 0, context);
        reject_leftovers(kv, context);
        return make_chain_env(n, slip, max_steps);
    }
    if (name == "grid") {
        int w = take_int(kv, "w", std::nullopt, context);
        int h = take_int(kv, "h", std::nullopt, context);
        double slip = take_double(kv, "slip", 0.0, context);
        int max_steps = take_int(kv, "max_steps", 0, context);
        GridObs obs = GridObs::OneHot;
        if (auto it = kv.find("obs"); it != kv.end()) {
            if (it->second == "onehot") obs = GridObs::OneHot;
            else if (it->second == "intensity") obs = GridObs::Intensity;
            else throw UsageError(context + ": obs must be onehot or intensity");
            kv.erase(it);
        }
        reject_leftovers(kv, context);
        return make_grid_env(w, h, slip, obs, max_steps);
    }
    if (name == "bandit") {
        int k = take_int(kv, "k", std::nullopt, context);
        double noise = take_double(kv, "noise", 0.0, context);
        reject_leftovers(kv, context);
        return make_bandit_env(k, noise);
    }
    throw UsageError("unknown env \"" + name + "\" (expected chain, grid or bandit)");
}

ShiftedEnv::ShiftedEnv(std::unique_ptr<Env> inner, const ShiftSpec& spec)
    : inner_(std::move(inner)), spec_(spec) {
    if (!inner_) throw UsageError("ShiftedEnv: null inner env");
}

std::vector<double> ShiftedEnv::reset(std::uint64_t seed) {
    episode_seed_ = seed;
    emission_ = 0;
    return corrupt(inner_->reset(seed));
}

StepResult ShiftedEnv::step(int action) {
    StepResult result = inner_->step(action);
    result.obs = corrupt(std::move(result.obs));
    return result;
}

std::vector<double> ShiftedEnv::corrupt(std::vector<double> obs) {
    if (spec_.magnitude == 0.0) return obs;  // bit-exact identity
    ShiftSpec per_emission = spec_;
    per_emission.seed = mix_seed(spec_.seed, mix_seed(episode_seed_, emission_));
    emission_ += 1;
    return apply_shift(obs, per_emission);
}

}  // namespace dsac
