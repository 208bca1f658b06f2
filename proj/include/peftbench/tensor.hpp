#pragma once

#include <cstddef>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace peftbench {

// Dense row-major tensor over float or double. One scalar type is used per
// run; gradient-check tests instantiate double, training defaults to float.
template <class T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty until touched by backward
    bool requires_grad = false;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, bool rg = false)
        : shape(std::move(s)), requires_grad(rg) {
        value.assign(numel(shape), T(0));
    }

    static std::size_t numel(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }

    std::size_t size() const { return value.size(); }
    std::size_t ndim() const { return shape.size(); }
    std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
    std::size_t cols() const { return shape.empty() ? 0 : shape.back(); }

    T* data() { return value.data(); }
    const T* data() const { return value.data(); }

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), T(0));
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << "[";
        for (std::size_t i = 0; i < shape.size(); ++i)
            os << (i ? "x" : "") << shape[i];
        os << "]";
        return os.str();
    }
};

template <class T>
using TensorPtr = std::shared_ptr<Tensor<T>>;

template <class T>
TensorPtr<T> make_tensor(std::vector<std::size_t> shape, bool requires_grad = false) {
    return std::make_shared<Tensor<T>>(std::move(shape), requires_grad);
}

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace peftbench
