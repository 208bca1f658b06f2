#pragma once

#include <functional>
#include <vector>

#include "peftbench/tensor.hpp"

namespace peftbench {

// Records the forward pass of one example as a topologically ordered list of
// operations. backward() replays the list once, in reverse. A tape is owned
// by a single thread; distinct tapes share nothing.
template <class T>
class Tape {
public:
    void record(std::function<void()> backward_fn) {
        nodes_.push_back(std::move(backward_fn));
    }

    // Seeds d(out)/d(out) = seed on a scalar output and propagates. A tape
    // where nothing required grad holds no nodes, so this is a no-op.
    void backward(const TensorPtr<T>& loss, T seed = T(1)) {
        if (loss->size() != 1)
            throw std::invalid_argument("backward expects a scalar, got " + loss->shape_str());
        if (!loss->requires_grad) return;
        loss->ensure_grad();
        loss->grad[0] += seed;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }

    std::size_t num_ops() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    std::vector<std::function<void()>> nodes_;
};

}  // namespace peftbench
