#pragma once

#include <cstdint>
#include <vector>

#include "dsac/errors.hpp"
#include "dsac/rng.hpp"

namespace dsac {

struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;  // genuine terminal only, never time truncation
};

/// Fixed-capacity ring buffer with a seeded uniform-with-replacement sampler.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::uint64_t sampler_seed)
        : capacity_(capacity), sampler_(sampler_seed) {
        if (capacity_ == 0) throw UsageError("ReplayBuffer: capacity must be positive");
    }

    void push(Transition transition) {
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(transition));
        } else {
            storage_[next_] = std::move(transition);
        }
        next_ = (next_ + 1) % capacity_;
        inserted_ += 1;
    }

    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t inserted() const { return inserted_; }

    const Transition& at(std::size_t i) const { return storage_[i]; }

    std::vector<std::size_t> sample_indices(int batch) {
        if (storage_.empty()) throw UsageError("ReplayBuffer: cannot sample from an empty buffer");
        if (batch < 1) throw UsageError("ReplayBuffer: batch must be >= 1");
        std::vector<std::size_t> indices(static_cast<std::size_t>(batch));
        for (auto& idx : indices) {
            idx = static_cast<std::size_t>(sampler_.uniform_int(static_cast<int>(storage_.size())));
        }
        return indices;
    }

    std::vector<Transition> sample(int batch) {
        std::vector<Transition> out;
        out.reserve(static_cast<std::size_t>(batch));
        for (std::size_t idx : sample_indices(batch)) out.push_back(storage_[idx]);
        return out;
    }

private:
    std::size_t capacity_;
    std::vector<Transition> storage_;
    std::size_t next_ = 0;
    std::uint64_t inserted_ = 0;
    Rng sampler_;
};

}  // namespace dsac
