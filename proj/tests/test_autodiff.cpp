#include <doctest.h>

#include <cmath>
#include <cstring>

#include "fd_check.hpp"
#include "peftbench/ops.hpp"
#include "peftbench/rng.hpp"

using namespace peftbench;
using testing::fd_max_rel_error;
using testing::random_tensor;

namespace {

template <class T>
TensorPtr<T> tensor_of(std::vector<std::size_t> shape, std::vector<T> vals, bool rg = false) {
    auto t = make_tensor<T>(std::move(shape), rg);
    t->value = std::move(vals);
    return t;
}

}  // namespace

TEST_CASE("matmul identity and hand-computed product") {
    Tape<double> tape;
    auto eye = tensor_of<double>({2, 2}, {1, 0, 0, 1});
    auto b = tensor_of<double>({2, 2}, {3, 4, 5, 6});
    auto c = matmul(tape, eye, b);
    CHECK(c->value == std::vector<double>{3, 4, 5, 6});

    auto row = tensor_of<double>({1, 2}, {1, 2});
    auto col = tensor_of<double>({2, 1}, {3, 4});
    auto p = matmul(tape, row, col);
    CHECK(p->value[0] == doctest::Approx(11.0));
}

TEST_CASE("matmul rejects mismatched inner dimensions naming both shapes") {
    Tape<double> tape;
    auto a = make_tensor<double>({2, 3});
    auto b = make_tensor<double>({4, 2});
    try {
        matmul(tape, a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[4x2]") != std::string::npos);
    }
}

TEST_CASE("matmul gradient matches central finite differences") {
    Rng rng(42);
    auto a = random_tensor<double>(rng, {4, 5});
    auto b = random_tensor<double>(rng, {5, 3});
    double err = fd_max_rel_error<double>({a, b}, [&](Tape<double>& t) {
        return sum_all(t, matmul(t, a, b));
    });
    CHECK(err < 1e-4);
}

TEST_CASE("matmul_nt gradient matches finite differences") {
    Rng rng(43);
    auto a = random_tensor<double>(rng, {3, 4});
    auto w = random_tensor<double>(rng, {5, 4});
    double err = fd_max_rel_error<double>({a, w}, [&](Tape<double>& t) {
        return sum_all(t, matmul_nt(t, a, w));
    });
    CHECK(err < 1e-4);
}

TEST_CASE("elementwise mul and scale-by-vector basics") {
    Tape<double> tape;
    auto a = tensor_of<double>({2}, {2, 3});
    auto b = tensor_of<double>({2}, {4, 5});
    // 1-D elementwise works through the generic path
    auto ab = mul(tape, a, b);
    CHECK(ab->value == std::vector<double>{8, 15});

    auto ones = tensor_of<double>({2, 3}, {1, 1, 1, 1, 1, 1});
    auto v = tensor_of<double>({3}, {1, 1, 1});
    auto scaled = scale_by_vector(tape, ones, v);
    CHECK(scaled->value == ones->value);
}

TEST_CASE("broadcast incompatibility is an error") {
    Tape<double> tape;
    auto a = make_tensor<double>({2, 3});
    auto v = make_tensor<double>({4});
    CHECK_THROWS_AS(scale_by_vector(tape, a, v), ShapeError);
    CHECK_THROWS_AS(add_rowvec(tape, a, v), ShapeError);
    CHECK_THROWS_AS(add(tape, a, make_tensor<double>({3, 2})), ShapeError);
}

TEST_CASE("gelu gradient on random scalars") {
    Rng rng(7);
    for (int i = 0; i < 10; ++i) {
        auto x = random_tensor<double>(rng, {1, 1}, 2.0);
        double err = fd_max_rel_error<double>({x}, [&](Tape<double>& t) {
            return sum_all(t, gelu(t, x));
        }, 1e-5);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("elementwise gradients vs finite differences") {
    Rng rng(8);
    auto a = random_tensor<double>(rng, {3, 4});
    auto b = random_tensor<double>(rng, {3, 4});
    auto v = random_tensor<double>(rng, {4});
    double err = fd_max_rel_error<double>({a, b, v}, [&](Tape<double>& t) {
        auto y = mul(t, add(t, a, b), b);
        y = scale_by_vector(t, y, v);
        y = add_rowvec(t, y, v);
        return sum_all(t, y);
    });
    CHECK(err < 1e-4);

    // relu checked away from the kink
    auto x = random_tensor<double>(rng, {2, 5});
    for (auto& val : x->value)
        if (std::abs(val) < 0.05) val += 0.2;
    double err2 = fd_max_rel_error<double>({x}, [&](Tape<double>& t) {
        return sum_all(t, relu(t, x));
    });
    CHECK(err2 < 1e-4);
}

TEST_CASE("softmax_cross_entropy examples") {
    Tape<double> tape;
    auto logits = make_tensor<double>({2, 4});
    auto loss = softmax_cross_entropy(tape, logits, {1, 3});
    CHECK(loss->value[0] == doctest::Approx(std::log(4.0)));

    auto hot = make_tensor<double>({1, 5});
    hot->value[2] = 1000.0;
    auto l2 = softmax_cross_entropy(tape, hot, {2});
    CHECK(l2->value[0] < 1e-6);

    CHECK_THROWS_AS(softmax_cross_entropy(tape, hot, {7}), std::out_of_range);
    CHECK_THROWS_AS(softmax_cross_entropy(tape, hot, {-1}), std::out_of_range);
}

TEST_CASE("softmax_cross_entropy gradient vs finite differences") {
    Rng rng(11);
    auto logits = random_tensor<double>(rng, {3, 7});
    double err = fd_max_rel_error<double>({logits}, [&](Tape<double>& t) {
        return softmax_cross_entropy(t, logits, {0, 3, 6});
    });
    CHECK(err < 1e-4);
}

TEST_CASE("rmsnorm forward cases") {
    Tape<double> tape;
    auto x = tensor_of<double>({2, 3}, {2.5, 2.5, 2.5, 2.5, 2.5, 2.5});
    auto w = tensor_of<double>({3}, {1, 1, 1});
    auto y = rmsnorm(tape, x, w);
    for (double v : y->value) CHECK(v == doctest::Approx(1.0).epsilon(1e-5));

    auto wz = make_tensor<double>({3});
    auto y0 = rmsnorm(tape, x, wz);
    for (double v : y0->value) CHECK(v == 0.0);
}

TEST_CASE("rmsnorm gradient vs finite differences") {
    Rng rng(12);
    auto x = random_tensor<double>(rng, {3, 6});
    auto w = random_tensor<double>(rng, {6});
    double err = fd_max_rel_error<double>({x, w}, [&](Tape<double>& t) {
        return sum_all(t, rmsnorm(t, x, w));
    });
    CHECK(err < 1e-4);
}

TEST_CASE("softmax, masking, slicing, concat and embedding gradients") {
    Rng rng(13);
    auto x = random_tensor<double>(rng, {4, 4});
    double err = fd_max_rel_error<double>({x}, [&](Tape<double>& t) {
        auto probs = softmax_rows(t, causal_mask(t, x));
        auto left = slice_cols(t, probs, 0, 2);
        auto right = slice_cols(t, probs, 2, 2);
        auto back = concat_cols(t, {right, left});
        return sum_all(t, mul(t, back, back));
    });
    CHECK(err < 1e-4);

    auto table = random_tensor<double>(rng, {6, 3});
    std::vector<int> ids{4, 1, 4, 0};
    double err2 = fd_max_rel_error<double>({table}, [&](Tape<double>& t) {
        auto e = embedding(t, table, ids);
        return sum_all(t, mul(t, e, e));
    });
    CHECK(err2 < 1e-4);

    auto a = random_tensor<double>(rng, {2, 3});
    auto b = random_tensor<double>(rng, {3, 3});
    double err3 = fd_max_rel_error<double>({a, b}, [&](Tape<double>& t) {
        auto cat = concat_rows(t, a, b);
        return sum_all(t, mul(t, cat, cat));
    });
    CHECK(err3 < 1e-4);
}

TEST_CASE("rel_bias gather gradient") {
    Rng rng(14);
    auto table = random_tensor<double>(rng, {5, 2});
    auto buckets = std::make_shared<std::vector<int>>(std::vector<int>{0, 1, 2, 1, 0, 3, 4, 4, 2});
    double err = fd_max_rel_error<double>({table}, [&](Tape<double>& t) {
        auto bias = rel_bias(t, table, buckets, 3, 3, 1);
        return sum_all(t, mul(t, bias, bias));
    });
    CHECK(err < 1e-4);
}

TEST_CASE("backward is a no-op when nothing requires grad") {
    Tape<double> tape;
    auto a = make_tensor<double>({2, 2});
    auto b = make_tensor<double>({2, 2});
    auto c = matmul(tape, a, b);
    auto s = sum_all(tape, c);
    CHECK(tape.num_ops() == 0);
    tape.backward(s);
    CHECK(a->grad.empty());
    CHECK(b->grad.empty());
}

TEST_CASE("forward is bit-identical across repeated seeded runs") {
    auto run = [] {
        Rng rng(99);
        auto a = random_tensor<float>(rng, {8, 8}, 1.0, false);
        auto w = random_tensor<float>(rng, {8}, 1.0, false);
        Tape<float> tape;
        auto y = rmsnorm(tape, gelu(tape, matmul(tape, a, a)), w);
        return y->value;
    };
    auto first = run();
    auto second = run();
    CHECK(std::memcmp(first.data(), second.data(), first.size() * sizeof(float)) == 0);
}
