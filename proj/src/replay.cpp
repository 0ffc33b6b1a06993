#include "aqe/replay.hpp"

#include <cmath>
#include <string>

#include "aqe/errors.hpp"

namespace aqe {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_dim,
                           int action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
    if (capacity == 0)
        throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    if (state_dim <= 0 || action_dim <= 0)
        throw std::invalid_argument("ReplayBuffer: dimensions must be positive");
}

void ReplayBuffer::push(const Transition& t) {
    if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_)
        throw ShapeError("ReplayBuffer::push: state width " +
                         std::to_string(t.state.size()) + " != " +
                         std::to_string(state_dim_));
    if (t.action.size() != action_dim_)
        throw ShapeError("ReplayBuffer::push: action width mismatch");
    if (!std::isfinite(t.reward))
        throw NumericError("ReplayBuffer::push: non-finite reward");
    if (data_.size() < capacity_) {
        data_.push_back(t);
    } else {
        data_[cursor_] = t; // FIFO overwrite of the oldest slot
    }
    cursor_ = (cursor_ + 1) % capacity_;
}

Batch ReplayBuffer::sample(int batch_size, Rng& rng) const {
    if (data_.empty())
        throw InvalidStateError("ReplayBuffer::sample: buffer is empty");
    if (batch_size < 1)
        throw std::invalid_argument("ReplayBuffer::sample: batch_size >= 1");
    Batch b;
    b.states.resize(batch_size, state_dim_);
    b.actions.resize(batch_size, action_dim_);
    b.next_states.resize(batch_size, state_dim_);
    b.rewards.resize(batch_size);
    b.done_mask.resize(batch_size);
    for (int i = 0; i < batch_size; ++i) {
        const Transition& t = data_[rng.index(data_.size())];
        b.states.row(i) = t.state.transpose();
        b.actions.row(i) = t.action.transpose();
        b.next_states.row(i) = t.next_state.transpose();
        b.rewards(i) = t.reward;
        b.done_mask(i) = t.done ? 1.0 : 0.0;
    }
    return b;
}

void ReplayBuffer::restore(std::vector<Transition> data, std::size_t cursor) {
    if (data.size() > capacity_)
        throw InvalidStateError("ReplayBuffer::restore: data exceeds capacity");
    if (cursor >= capacity_ && !(cursor == 0 && capacity_ > 0))
        throw InvalidStateError("ReplayBuffer::restore: cursor out of range");
    for (const Transition& t : data)
        if (t.state.size() != state_dim_ || t.action.size() != action_dim_ ||
            t.next_state.size() != state_dim_)
            throw ShapeError("ReplayBuffer::restore: dimension mismatch");
    data_ = std::move(data);
    cursor_ = cursor;
}

} // namespace aqe
