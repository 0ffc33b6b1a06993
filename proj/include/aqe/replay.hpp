#pragma once

#include <cstddef>
#include <vector>

#include "aqe/network.hpp"
#include "aqe/rng.hpp"

namespace aqe {

/// One environment interaction. `done` is true only for genuine terminal
/// states; time-limit truncation keeps done=false so targets still bootstrap.
struct Transition {
    Vec state;
    Vec action;
    double reward = 0.0;
    Vec next_state;
    bool done = false;
};

/// Mini-batch in matrix form; rows are transitions.
struct Batch {
    Mat states;
    Mat actions;
    Vec rewards;
    Mat next_states;
    Vec done_mask; // 1.0 for terminal transitions, else 0.0
    int size() const { return static_cast<int>(rewards.size()); }
};

/// Fixed-capacity ring buffer with FIFO overwrite and uniform
/// with-replacement sampling.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, int state_dim, int action_dim);

    void push(const Transition& t);
    Batch sample(int batch_size, Rng& rng) const;

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t cursor() const { return cursor_; }
    int state_dim() const { return state_dim_; }
    int action_dim() const { return action_dim_; }
    const Transition& at(std::size_t i) const { return data_[i]; }

    /// Restores storage exactly (checkpoint path); transitions must already
    /// satisfy the buffer's dimensions.
    void restore(std::vector<Transition> data, std::size_t cursor);

private:
    std::size_t capacity_;
    int state_dim_;
    int action_dim_;
    std::vector<Transition> data_;
    std::size_t cursor_ = 0;
};

} // namespace aqe
