#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "peftbench/tape.hpp"
#include "peftbench/tensor.hpp"

// Differentiable operations over 1-D/2-D tensors. Each op validates shapes,
// computes the forward value, and (when any operand requires grad) records a
// closure on the tape that accumulates into the operands' grad buffers.
// Broadcasting is restricted to trailing-axis vectors; everything else is a
// shape error.

namespace peftbench {
namespace detail {

// C(+)= A * B, row-major. acc selects accumulate vs overwrite.
template <class T>
void gemm_nn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool acc) {
    if (!acc)
        for (std::size_t i = 0; i < m * n; ++i) c[i] = T(0);
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            T av = arow[p];
            if (av == T(0)) continue;
            const T* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C(+)= A * B^T with B stored [n,k].
template <class T>
void gemm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool acc) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const T* brow = b + j * k;
            T s = acc ? crow[j] : T(0);
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] = s;
        }
    }
}

// C(+)= A^T * B with A stored [k,m].
template <class T>
void gemm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n, bool acc) {
    if (!acc)
        for (std::size_t i = 0; i < m * n; ++i) c[i] = T(0);
    for (std::size_t p = 0; p < k; ++p) {
        const T* arow = a + p * m;
        const T* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            T av = arow[i];
            if (av == T(0)) continue;
            T* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

template <class T>
void require_2d(const TensorPtr<T>& t, const char* who) {
    require(t->ndim() == 2, std::string(who) + ": expected 2-D tensor, got " + t->shape_str());
}

}  // namespace detail

template <class T>
TensorPtr<T> matmul(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
    detail::require_2d(a, "matmul");
    detail::require_2d(b, "matmul");
    detail::require(a->shape[1] == b->shape[0],
                    "matmul: inner dimensions disagree, " + a->shape_str() + " vs " + b->shape_str());
    std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
    auto out = make_tensor<T>({m, n}, a->requires_grad || b->requires_grad);
    detail::gemm_nn(a->data(), b->data(), out->data(), m, k, n, false);
    if (out->requires_grad) {
        tape.record([a, b, out, m, k, n] {
            if (a->requires_grad) {
                a->ensure_grad();
                detail::gemm_nt(out->grad.data(), b->data(), a->grad.data(), m, n, k, true);
            }
            if (b->requires_grad) {
                b->ensure_grad();
                detail::gemm_tn(a->data(), out->grad.data(), b->grad.data(), k, m, n, true);
            }
        });
    }
    return out;
}

// a[m,k] * b[n,k]^T -> [m,n]. The weight layout used by every linear layer.
template <class T>
TensorPtr<T> matmul_nt(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
    detail::require_2d(a, "matmul_nt");
    detail::require_2d(b, "matmul_nt");
    detail::require(a->shape[1] == b->shape[1],
                    "matmul_nt: inner dimensions disagree, " + a->shape_str() + " vs " + b->shape_str());
    std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[0];
    auto out = make_tensor<T>({m, n}, a->requires_grad || b->requires_grad);
    detail::gemm_nt(a->data(), b->data(), out->data(), m, k, n, false);
    if (out->requires_grad) {
        tape.record([a, b, out, m, k, n] {
            if (a->requires_grad) {
                a->ensure_grad();
                detail::gemm_nn(out->grad.data(), b->data(), a->grad.data(), m, n, k, true);
            }
            if (b->requires_grad) {
                b->ensure_grad();
                detail::gemm_tn(out->grad.data(), a->data(), b->grad.data(), n, m, k, true);
            }
        });
    }
    return out;
}

template <class T>
TensorPtr<T> add(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
    detail::require(a->shape == b->shape,
                    "add: shapes differ, " + a->shape_str() + " vs " + b->shape_str());
    auto out = make_tensor<T>(a->shape, a->requires_grad || b->requires_grad);
    for (std::size_t i = 0; i < a->size(); ++i) out->value[i] = a->value[i] + b->value[i];
    if (out->requires_grad) {
        tape.record([a, b, out] {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < b->size(); ++i) b->grad[i] += out->grad[i];
            }
        });
    }
    return out;
}

template <class T>
TensorPtr<T> mul(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
    detail::require(a->shape == b->shape,
                    "mul: shapes differ, " + a->shape_str() + " vs " + b->shape_str());
    auto out = make_tensor<T>(a->shape, a->requires_grad || b->requires_grad);
    for (std::size_t i = 0; i < a->size(); ++i) out->value[i] = a->value[i] * b->value[i];
    if (out->requires_grad) {
        tape.record([a, b, out] {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i] * b->value[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < b->size(); ++i) b->grad[i] += out->grad[i] * a->value[i];
            }
        });
    }
    return out;
}

// Elementwise scale of each row of a [m,n] matrix by a length-n vector.
// Gradient for the vector sums over the broadcast (row) axis.
template <class T>
TensorPtr<T> scale_by_vector(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& v) {
    detail::require_2d(a, "scale_by_vector");
    detail::require(v->ndim() == 1 && v->shape[0] == a->shape[1],
                    "scale_by_vector: cannot broadcast " + v->shape_str() + " over " + a->shape_str());
    std::size_t m = a->shape[0], n = a->shape[1];
    auto out = make_tensor<T>(a->shape, a->requires_grad || v->requires_grad);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out->value[i * n + j] = a->value[i * n + j] * v->value[j];
    if (out->requires_grad) {
        tape.record([a, v, out, m, n] {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        a->grad[i * n + j] += out->grad[i * n + j] * v->value[j];
            }
            if (v->requires_grad) {
                v->ensure_grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        v->grad[j] += out->grad[i * n + j] * a->value[i * n + j];
            }
        });
    }
    return out;
}

// Adds a length-n vector to each row of a [m,n] matrix (injected bias).
template <class T>
TensorPtr<T> add_rowvec(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& v) {
    detail::require_2d(a, "add_rowvec");
    detail::require(v->ndim() == 1 && v->shape[0] == a->shape[1],
                    "add_rowvec: cannot broadcast " + v->shape_str() + " over " + a->shape_str());
    std::size_t m = a->shape[0], n = a->shape[1];
    auto out = make_tensor<T>(a->shape, a->requires_grad || v->requires_grad);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out->value[i * n + j] = a->value[i * n + j] + v->value[j];
    if (out->requires_grad) {
        tape.record([a, v, out, m, n] {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < m * n; ++i) a->grad[i] += out->grad[i];
            }
            if (v->requires_grad) {
                v->ensure_grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) v->grad[j] += out->grad[i * n + j];
            }
        });
    }
    return out;
}

template <class T>
TensorPtr<T> scale(Tape<T>& tape, const TensorPtr<T>& a, T c) {
    auto out = make_tensor<T>(a->shape, a->requires_grad);
    for (std::size_t i = 0; i < a->size(); ++i) out->value[i] = a->value[i] * c;
    if (out->requires_grad) {
        tape.record([a, out, c] {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i] * c;
        });
    }
    return out;
}

template <class T>
TensorPtr<T> relu(Tape<T>& tape, const TensorPtr<T>& a) {
    auto out = make_tensor<T>(a->shape, a->requires_grad);
    for (std::size_t i = 0; i < a->size(); ++i) out->value[i] = a->value[i] > T(0) ? a->value[i] : T(0);
    if (out->requires_grad) {
        tape.record([a, out] {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->size(); ++i)
                if (a->value[i] > T(0)) a->grad[i] += out->grad[i];
        });
    }
    return out;
}

namespace detail {
// tanh-approximated gelu: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
template <class T>
inline T gelu_fwd(T x) {
    const T k = T(0.7978845608028654);
    const T c = T(0.044715);
    return T(0.5) * x * (T(1) + std::tanh(k * (x + c * x * x * x)));
}
template <class T>
inline T gelu_bwd(T x) {
    const T k = T(0.7978845608028654);
    const T c = T(0.044715);
    T u = k * (x + c * x * x * x);
    T th = std::tanh(u);
    T sech2 = T(1) - th * th;
    return T(0.5) * (T(1) + th) + T(0.5) * x * sech2 * k * (T(1) + T(3) * c * x * x);
}
}  // namespace detail

template <class T>
TensorPtr<T> gelu(Tape<T>& tape, const TensorPtr<T>& a) {
    auto out = make_tensor<T>(a->shape, a->requires_grad);
    for (std::size_t i = 0; i < a->size(); ++i) out->value[i] = detail::gelu_fwd(a->value[i]);
    if (out->requires_grad) {
        tape.record([a, out] {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->size(); ++i)
                a->grad[i] += out->grad[i] * detail::gelu_bwd(a->value[i]);
        });
    }
    return out;
}

// RMS normalization over the last axis, then elementwise scale by weight.
// x[m,d], w[d] -> x / sqrt(mean(x^2) + 1e-6) * w, row by row.
template <class T>
TensorPtr<T> rmsnorm(Tape<T>& tape, const TensorPtr<T>& x, const TensorPtr<T>& w) {
    detail::require_2d(x, "rmsnorm");
    detail::require(w->ndim() == 1 && w->shape[0] == x->shape[1],
                    "rmsnorm: weight " + w->shape_str() + " does not match " + x->shape_str());
    const T eps = T(1e-6);
    std::size_t m = x->shape[0], d = x->shape[1];
    auto out = make_tensor<T>(x->shape, x->requires_grad || w->requires_grad);
    std::vector<T> inv_rms(m);
    for (std::size_t i = 0; i < m; ++i) {
        T ss = T(0);
        for (std::size_t j = 0; j < d; ++j) {
            T v = x->value[i * d + j];
            ss += v * v;
        }
        inv_rms[i] = T(1) / std::sqrt(ss / T(d) + eps);
        for (std::size_t j = 0; j < d; ++j)
            out->value[i * d + j] = x->value[i * d + j] * inv_rms[i] * w->value[j];
    }
    if (out->requires_grad) {
        tape.record([x, w, out, inv_rms, m, d] {
            for (std::size_t i = 0; i < m; ++i) {
                const T s = inv_rms[i];
                if (x->requires_grad) {
                    x->ensure_grad();
                    // d(x_j * s * w_j)/dx_k = s w_j delta_jk - x_j w_j x_k s^3 / d
                    T dot = T(0);
                    for (std::size_t j = 0; j < d; ++j)
                        dot += out->grad[i * d + j] * w->value[j] * x->value[i * d + j];
                    const T coef = dot * s * s * s / T(d);
                    for (std::size_t k = 0; k < d; ++k)
                        x->grad[i * d + k] += out->grad[i * d + k] * w->value[k] * s -
                                              coef * x->value[i * d + k];
                }
                if (w->requires_grad) {
                    w->ensure_grad();
                    for (std::size_t j = 0; j < d; ++j)
                        w->grad[j] += out->grad[i * d + j] * x->value[i * d + j] * s;
                }
            }
        });
    }
    return out;
}

// Row-wise softmax over the last axis of a 2-D tensor, max-stabilized.
template <class T>
TensorPtr<T> softmax_rows(Tape<T>& tape, const TensorPtr<T>& x) {
    detail::require_2d(x, "softmax_rows");
    std::size_t m = x->shape[0], n = x->shape[1];
    auto out = make_tensor<T>(x->shape, x->requires_grad);
    for (std::size_t i = 0; i < m; ++i) {
        const T* row = x->data() + i * n;
        T mx = row[0];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        T sum = T(0);
        for (std::size_t j = 0; j < n; ++j) {
            T e = std::exp(row[j] - mx);
            out->value[i * n + j] = e;
            sum += e;
        }
        for (std::size_t j = 0; j < n; ++j) out->value[i * n + j] /= sum;
    }
    if (out->requires_grad) {
        tape.record([x, out, m, n] {
            x->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                T dot = T(0);
                for (std::size_t j = 0; j < n; ++j)
                    dot += out->grad[i * n + j] * out->value[i * n + j];
                for (std::size_t j = 0; j < n; ++j)
                    x->grad[i * n + j] += out->value[i * n + j] * (out->grad[i * n + j] - dot);
            }
        });
    }
    return out;
}

// Adds a large negative constant above the diagonal so that softmax assigns
// (numerically) zero probability to future positions. Constant offset, so
// the gradient passes through unchanged.
template <class T>
TensorPtr<T> causal_mask(Tape<T>& tape, const TensorPtr<T>& scores) {
    detail::require_2d(scores, "causal_mask");
    detail::require(scores->shape[0] == scores->shape[1],
                    "causal_mask: expected square scores, got " + scores->shape_str());
    std::size_t n = scores->shape[0];
    const T neg = T(-1e9);
    auto out = make_tensor<T>(scores->shape, scores->requires_grad);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out->value[i * n + j] = scores->value[i * n + j] + (j > i ? neg : T(0));
    if (out->requires_grad) {
        tape.record([scores, out] {
            scores->ensure_grad();
            for (std::size_t i = 0; i < scores->size(); ++i) scores->grad[i] += out->grad[i];
        });
    }
    return out;
}

// Mean negative log-likelihood of integer targets under row-wise softmax.
// Stabilized by max subtraction; probabilities are kept for the backward.
template <class T>
TensorPtr<T> softmax_cross_entropy(Tape<T>& tape, const TensorPtr<T>& logits,
                                   const std::vector<int>& targets) {
    detail::require_2d(logits, "softmax_cross_entropy");
    std::size_t n = logits->shape[0], v = logits->shape[1];
    detail::require(targets.size() == n,
                    "softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                        std::to_string(n) + " rows");
    for (int t : targets)
        if (t < 0 || static_cast<std::size_t>(t) >= v)
            throw std::out_of_range("softmax_cross_entropy: target id " + std::to_string(t) +
                                    " outside vocab of " + std::to_string(v));
    auto out = make_tensor<T>({1}, logits->requires_grad);
    auto probs = std::make_shared<std::vector<T>>(n * v);
    T loss = T(0);
    for (std::size_t i = 0; i < n; ++i) {
        const T* row = logits->data() + i * v;
        T mx = row[0];
        for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, row[j]);
        T sum = T(0);
        for (std::size_t j = 0; j < v; ++j) {
            T e = std::exp(row[j] - mx);
            (*probs)[i * v + j] = e;
            sum += e;
        }
        for (std::size_t j = 0; j < v; ++j) (*probs)[i * v + j] /= sum;
        loss -= std::log((*probs)[i * v + targets[i]]);
    }
    out->value[0] = loss / T(n);
    if (out->requires_grad) {
        tape.record([logits, out, probs, targets, n, v] {
            logits->ensure_grad();
            const T g = out->grad[0] / T(n);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < v; ++j)
                    logits->grad[i * v + j] += g * (*probs)[i * v + j];
                logits->grad[i * v + targets[i]] -= g;
            }
        });
    }
    return out;
}

// Rows of an embedding table gathered by token id; backward scatter-adds.
template <class T>
TensorPtr<T> embedding(Tape<T>& tape, const TensorPtr<T>& table, const std::vector<int>& ids) {
    detail::require_2d(table, "embedding");
    std::size_t v = table->shape[0], d = table->shape[1];
    for (int id : ids)
        if (id < 0 || static_cast<std::size_t>(id) >= v)
            throw std::out_of_range("embedding: token id " + std::to_string(id) +
                                    " outside vocab of " + std::to_string(v));
    auto out = make_tensor<T>({ids.size(), d}, table->requires_grad);
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy_n(table->data() + static_cast<std::size_t>(ids[i]) * d, d, out->data() + i * d);
    if (out->requires_grad) {
        tape.record([table, out, ids, d] {
            table->ensure_grad();
            for (std::size_t i = 0; i < ids.size(); ++i)
                for (std::size_t j = 0; j < d; ++j)
                    table->grad[static_cast<std::size_t>(ids[i]) * d + j] += out->grad[i * d + j];
        });
    }
    return out;
}

template <class T>
TensorPtr<T> slice_cols(Tape<T>& tape, const TensorPtr<T>& x, std::size_t start, std::size_t len) {
    detail::require_2d(x, "slice_cols");
    detail::require(start + len <= x->shape[1],
                    "slice_cols: [" + std::to_string(start) + ", " + std::to_string(start + len) +
                        ") out of range for " + x->shape_str());
    std::size_t m = x->shape[0], n = x->shape[1];
    auto out = make_tensor<T>({m, len}, x->requires_grad);
    for (std::size_t i = 0; i < m; ++i)
        std::copy_n(x->data() + i * n + start, len, out->data() + i * len);
    if (out->requires_grad) {
        tape.record([x, out, start, len, m, n] {
            x->ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < len; ++j)
                    x->grad[i * n + start + j] += out->grad[i * len + j];
        });
    }
    return out;
}

template <class T>
TensorPtr<T> concat_cols(Tape<T>& tape, const std::vector<TensorPtr<T>>& parts) {
    detail::require(!parts.empty(), "concat_cols: no operands");
    std::size_t m = parts[0]->shape[0], total = 0;
    bool rg = false;
    for (const auto& p : parts) {
        detail::require_2d(p, "concat_cols");
        detail::require(p->shape[0] == m, "concat_cols: row counts differ, " + p->shape_str() +
                                              " vs " + parts[0]->shape_str());
        total += p->shape[1];
        rg = rg || p->requires_grad;
    }
    auto out = make_tensor<T>({m, total}, rg);
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::size_t w = p->shape[1];
        for (std::size_t i = 0; i < m; ++i)
            std::copy_n(p->data() + i * w, w, out->data() + i * total + off);
        off += w;
    }
    if (rg) {
        tape.record([parts, out, m, total] {
            std::size_t off = 0;
            for (const auto& p : parts) {
                std::size_t w = p->shape[1];
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < w; ++j)
                            p->grad[i * w + j] += out->grad[i * total + off + j];
                }
                off += w;
            }
        });
    }
    return out;
}

template <class T>
TensorPtr<T> concat_rows(Tape<T>& tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
    detail::require_2d(a, "concat_rows");
    detail::require_2d(b, "concat_rows");
    detail::require(a->shape[1] == b->shape[1], "concat_rows: column counts differ, " +
                                                    a->shape_str() + " vs " + b->shape_str());
    std::size_t ra = a->shape[0], rb = b->shape[0], n = a->shape[1];
    auto out = make_tensor<T>({ra + rb, n}, a->requires_grad || b->requires_grad);
    std::copy_n(a->data(), ra * n, out->data());
    std::copy_n(b->data(), rb * n, out->data() + ra * n);
    if (out->requires_grad) {
        tape.record([a, b, out, ra, rb, n] {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < ra * n; ++i) a->grad[i] += out->grad[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < rb * n; ++i) b->grad[i] += out->grad[ra * n + i];
            }
        });
    }
    return out;
}

// Per-head relative-position bias: out[i,j] = table[bucket[i*cols+j], head],
// with table stored [n_buckets, n_heads]. Backward scatter-adds into table.
template <class T>
TensorPtr<T> rel_bias(Tape<T>& tape, const TensorPtr<T>& table,
                      const std::shared_ptr<std::vector<int>>& buckets, std::size_t rows,
                      std::size_t cols, std::size_t head) {
    detail::require_2d(table, "rel_bias");
    detail::require(head < table->shape[1], "rel_bias: head index out of range");
    std::size_t nh = table->shape[1];
    auto out = make_tensor<T>({rows, cols}, table->requires_grad);
    for (std::size_t i = 0; i < rows * cols; ++i)
        out->value[i] = table->value[static_cast<std::size_t>((*buckets)[i]) * nh + head];
    if (out->requires_grad) {
        tape.record([table, out, buckets, rows, cols, head, nh] {
            table->ensure_grad();
            for (std::size_t i = 0; i < rows * cols; ++i)
                table->grad[static_cast<std::size_t>((*buckets)[i]) * nh + head] += out->grad[i];
        });
    }
    return out;
}

template <class T>
TensorPtr<T> sum_all(Tape<T>& tape, const TensorPtr<T>& x) {
    auto out = make_tensor<T>({1}, x->requires_grad);
    T s = T(0);
    for (std::size_t i = 0; i < x->size(); ++i) s += x->value[i];
    out->value[0] = s;
    if (out->requires_grad) {
        tape.record([x, out] {
            x->ensure_grad();
            for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += out->grad[0];
        });
    }
    return out;
}

}  // namespace peftbench
