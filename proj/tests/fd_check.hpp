#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "peftbench/ops.hpp"
#include "peftbench/rng.hpp"

// Central finite-difference oracle for gradient checks. Independent of the
// tape's backward rules: it only re-evaluates the forward pass at perturbed
// inputs. Run at double precision.

namespace peftbench::testing {

template <class T>
using GraphBuilder = std::function<TensorPtr<T>(Tape<T>&)>;

// Returns the maximum relative error between analytic and numeric gradients
// over every entry of every leaf. Leaves must have requires_grad set.
template <class T>
double fd_max_rel_error(const std::vector<TensorPtr<T>>& leaves, const GraphBuilder<T>& build,
                        T eps = T(1e-4)) {
    auto eval = [&]() -> T {
        Tape<T> tape;
        return build(tape)->value[0];
    };

    for (auto& leaf : leaves) leaf->zero_grad();
    Tape<T> tape;
    auto loss = build(tape);
    tape.backward(loss);

    double worst = 0.0;
    for (auto& leaf : leaves) {
        leaf->ensure_grad();
        for (std::size_t i = 0; i < leaf->size(); ++i) {
            const T saved = leaf->value[i];
            leaf->value[i] = saved + eps;
            const double fp = eval();
            leaf->value[i] = saved - eps;
            const double fm = eval();
            leaf->value[i] = saved;
            const double numeric = (fp - fm) / (2.0 * static_cast<double>(eps));
            const double analytic = leaf->grad[i];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            worst = std::max(worst, std::abs(numeric - analytic) / denom);
        }
    }
    return worst;
}

template <class T>
TensorPtr<T> random_tensor(Rng& rng, std::vector<std::size_t> shape, double stddev = 1.0,
                           bool requires_grad = true) {
    auto t = make_tensor<T>(std::move(shape), requires_grad);
    for (auto& v : t->value) v = static_cast<T>(rng.normal(0.0, stddev));
    return t;
}

}  // namespace peftbench::testing
