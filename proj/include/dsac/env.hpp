#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dsac/shift.hpp"
#include "dsac/tabular.hpp"

namespace dsac {

struct EnvDescription {
    int observation_dim = 0;
    int action_count = 0;
    int max_episode_steps = 0;
    std::string name;  // canonical spec string, e.g. "chain:n=10,slip=0.1"
};

struct StepResult {
    std::vector<double> obs;
    double reward = 0.0;
    bool terminal = false;   // genuine terminal state
    bool truncated = false;  // episode cap hit, distinct from termination
};

/// Episodic discrete-action environment. Reset before the first step;
/// stepping a finished episode is a usage error.
class Env {
public:
    virtual ~Env() = default;
    virtual const EnvDescription& description() const = 0;
    virtual std::vector<double> reset(std::uint64_t seed) = 0;
    virtual StepResult step(int action) = 0;
    /// Exact mirror of the dynamics when one exists (all built-ins have one).
    virtual const TabularMDP* tabular() const { return nullptr; }
};

/// n states in a line, start at 0, sparse reward 1 on reaching the far end
/// (terminal). Actions move left/right; a slip reverses the move.
std::unique_ptr<Env> make_chain_env(int n, double slip, int max_episode_steps = 0);

enum class GridObs { OneHot, Intensity };

/// w x h grid, start top-left, goal bottom-right (+1), center pit (-1); a slip
/// substitutes a uniformly random other direction.
std::unique_ptr<Env> make_grid_env(int w, int h, double slip = 0.0,
                                   GridObs obs = GridObs::OneHot, int max_episode_steps = 0);

/// Single-state k-armed bandit, arm means evenly spaced on [0, 1], Gaussian
/// reward noise. Episodes last one step.
std::unique_ptr<Env> make_bandit_env(int k, double noise_std);

/// Builds an env from a spec string: "chain:n=10,slip=0.1",
/// "grid:w=4,h=4,slip=0.0,obs=onehot", "bandit:k=5,noise=0.1".
std::unique_ptr<Env> make_env(const std::string& spec);

/// Applies an observation shift to everything the inner env emits; dynamics,
/// rewards and episode accounting are untouched.
class ShiftedEnv : public Env {
public:
    ShiftedEnv(std::unique_ptr<Env> inner, const ShiftSpec& spec);

    const EnvDescription& description() const override { return inner_->description(); }
    std::vector<double> reset(std::uint64_t seed) override;
    StepResult step(int action) override;
    const TabularMDP* tabular() const override { return inner_->tabular(); }

private:
    std::vector<double> corrupt(std::vector<double> obs);

    std::unique_ptr<Env> inner_;
    ShiftSpec spec_;
    std::uint64_t episode_seed_ = 0;
    std::uint64_t emission_ = 0;
};

}  // namespace dsac
