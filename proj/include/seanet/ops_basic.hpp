#pragma once

// Elementwise, reduction, shape, softmax and matmul ops with reverse-mode
// derivatives. All ops allocate fresh outputs; inputs are never mutated.

#include "seanet/tensor.hpp"

#include <Eigen/Core>

#include <cmath>

namespace seanet {

namespace detail {

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename T>
void check_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
    SEANET_CHECK(a.shape() == b.shape(), op, ": shape mismatch ", shape_str(a.shape()), " vs ",
                 shape_str(b.shape()));
}

} // namespace detail

// ------------------------------------------------------------- elementwise

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape("add", a, b);
    Tensor<T> out(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
    auto an = a.node(), bn = b.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {a, b}, [self, an, bn]() {
        const int64_t n = static_cast<int64_t>(self->value.size());
        if (an->requires_grad) {
            an->ensure_grad();
            for (int64_t i = 0; i < n; ++i) an->grad[i] += self->grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int64_t i = 0; i < n; ++i) bn->grad[i] += self->grad[i];
        }
    });
    return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape("sub", a, b);
    Tensor<T> out(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
    auto an = a.node(), bn = b.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {a, b}, [self, an, bn]() {
        const int64_t n = static_cast<int64_t>(self->value.size());
        if (an->requires_grad) {
            an->ensure_grad();
            for (int64_t i = 0; i < n; ++i) an->grad[i] += self->grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int64_t i = 0; i < n; ++i) bn->grad[i] -= self->grad[i];
        }
    });
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape("mul", a, b);
    Tensor<T> out(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
    auto an = a.node(), bn = b.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {a, b}, [self, an, bn]() {
        const int64_t n = static_cast<int64_t>(self->value.size());
        if (an->requires_grad) {
            an->ensure_grad();
            for (int64_t i = 0; i < n; ++i) an->grad[i] += self->grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int64_t i = 0; i < n; ++i) bn->grad[i] += self->grad[i] * an->value[i];
        }
    });
    return out;
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape("div", a, b);
    Tensor<T> out(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] / pb[i];
    auto an = a.node(), bn = b.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {a, b}, [self, an, bn]() {
        const int64_t n = static_cast<int64_t>(self->value.size());
        if (an->requires_grad) {
            an->ensure_grad();
            for (int64_t i = 0; i < n; ++i) an->grad[i] += self->grad[i] / bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                bn->grad[i] -=
                    self->grad[i] * an->value[i] / (bn->value[i] * bn->value[i]);
        }
    });
    return out;
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
    Tensor<T> out(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + c;
    auto an = a.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {a}, [self, an]() {
        an->ensure_grad();
        const int64_t n = static_cast<int64_t>(self->value.size());
        for (int64_t i = 0; i < n; ++i) an->grad[i] += self->grad[i];
    });
    return out;
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T c) {
    Tensor<T> out(a.shape());
    const T* pa = a.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * c;
    auto an = a.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {a}, [self, an, c]() {
        an->ensure_grad();
        const int64_t n = static_cast<int64_t>(self->value.size());
        for (int64_t i = 0; i < n; ++i) an->grad[i] += self->grad[i] * c;
    });
    return out;
}

// ------------------------------------------------------------- activations

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const T* px = x.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = px[i] > T(0) ? px[i] : T(0);
    auto xn = x.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x}, [self, xn]() {
        xn->ensure_grad();
        const int64_t n = static_cast<int64_t>(self->value.size());
        for (int64_t i = 0; i < n; ++i)
            if (xn->value[i] > T(0)) xn->grad[i] += self->grad[i];
    });
    return out;
}

template <typename T>
Tensor<T> relu6(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const T* px = x.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = std::min(std::max(px[i], T(0)), T(6));
    auto xn = x.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x}, [self, xn]() {
        xn->ensure_grad();
        const int64_t n = static_cast<int64_t>(self->value.size());
        for (int64_t i = 0; i < n; ++i)
            if (xn->value[i] > T(0) && xn->value[i] < T(6)) xn->grad[i] += self->grad[i];
    });
    return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const T* px = x.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = T(1) / (T(1) + std::exp(-px[i]));
    auto xn = x.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x}, [self, xn]() {
        xn->ensure_grad();
        const int64_t n = static_cast<int64_t>(self->value.size());
        for (int64_t i = 0; i < n; ++i) {
            const T y = self->value[i];
            xn->grad[i] += self->grad[i] * y * (T(1) - y);
        }
    });
    return out;
}

/// PReLU with one learnable slope shared across all entries. `slope` is a
/// 1-element tensor.
template <typename T>
Tensor<T> prelu_shared(const Tensor<T>& x, const Tensor<T>& slope) {
    SEANET_CHECK(slope.numel() == 1, "prelu_shared: slope must be a single shared scalar, got ",
                 shape_str(slope.shape()));
    Tensor<T> out(x.shape());
    const T a = slope.data()[0];
    const T* px = x.data();
    T* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = px[i] > T(0) ? px[i] : a * px[i];
    auto xn = x.node(), an = slope.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x, slope}, [self, xn, an]() {
        const int64_t n = static_cast<int64_t>(self->value.size());
        const T a = an->value[0];
        if (xn->requires_grad) {
            xn->ensure_grad();
            for (int64_t i = 0; i < n; ++i)
                xn->grad[i] += self->grad[i] * (xn->value[i] > T(0) ? T(1) : a);
        }
        if (an->requires_grad) {
            an->ensure_grad();
            T acc = T(0);
            for (int64_t i = 0; i < n; ++i)
                if (xn->value[i] <= T(0)) acc += self->grad[i] * xn->value[i];
            an->grad[0] += acc;
        }
    });
    return out;
}

// -------------------------------------------------------------- reductions

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
    Tensor<T> out(Shape{1});
    const T* px = x.data();
    T acc = T(0);
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) acc += px[i];
    out.data()[0] = acc;
    auto xn = x.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x}, [self, xn]() {
        xn->ensure_grad();
        const T g = self->grad[0];
        const int64_t n = static_cast<int64_t>(xn->value.size());
        for (int64_t i = 0; i < n; ++i) xn->grad[i] += g;
    });
    return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
    SEANET_CHECK(x.numel() > 0, "mean: empty tensor");
    Tensor<T> out(Shape{1});
    const T* px = x.data();
    T acc = T(0);
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) acc += px[i];
    out.data()[0] = acc / static_cast<T>(n);
    auto xn = x.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x}, [self, xn]() {
        xn->ensure_grad();
        const int64_t n = static_cast<int64_t>(xn->value.size());
        const T g = self->grad[0] / static_cast<T>(n);
        for (int64_t i = 0; i < n; ++i) xn->grad[i] += g;
    });
    return out;
}

// ------------------------------------------------------------------- shape

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape new_shape) {
    SEANET_CHECK(numel_of(new_shape) == x.numel(), "reshape: cannot view ",
                 shape_str(x.shape()), " as ", shape_str(new_shape));
    Tensor<T> out = Tensor<T>::from_data(std::move(new_shape), x.vec());
    auto xn = x.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x}, [self, xn]() {
        xn->ensure_grad();
        const int64_t n = static_cast<int64_t>(xn->value.size());
        for (int64_t i = 0; i < n; ++i) xn->grad[i] += self->grad[i];
    });
    return out;
}

/// Concatenate NCHW tensors along the channel axis.
template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& xs) {
    SEANET_CHECK(!xs.empty(), "concat_channels: no inputs");
    const Shape& s0 = xs[0].shape();
    SEANET_CHECK(s0.size() == 4, "concat_channels: expected NCHW, got ", shape_str(s0));
    int64_t ctotal = 0;
    for (const auto& x : xs) {
        const Shape& s = x.shape();
        SEANET_CHECK(s.size() == 4 && s[0] == s0[0] && s[2] == s0[2] && s[3] == s0[3],
                     "concat_channels: incompatible shape ", shape_str(s), " vs ", shape_str(s0));
        ctotal += s[1];
    }
    const int64_t N = s0[0], HW = s0[2] * s0[3];
    Tensor<T> out(Shape{N, ctotal, s0[2], s0[3]});
    T* po = out.data();
    for (int64_t n = 0; n < N; ++n) {
        int64_t coff = 0;
        for (const auto& x : xs) {
            const int64_t c = x.shape()[1];
            const T* px = x.data() + n * c * HW;
            std::copy(px, px + c * HW, po + (n * ctotal + coff) * HW);
            coff += c;
        }
    }
    std::vector<std::shared_ptr<Node<T>>> in_nodes;
    for (const auto& x : xs) in_nodes.push_back(x.node());
    Node<T>* self = out.node().get();
    detail::wire(out, xs, [self, in_nodes, N, ctotal, HW]() {
        for (int64_t n = 0; n < N; ++n) {
            int64_t coff = 0;
            for (const auto& xn : in_nodes) {
                const int64_t c = xn->shape[1];
                if (xn->requires_grad) {
                    xn->ensure_grad();
                    const T* pg = self->grad.data() + (n * ctotal + coff) * HW;
                    T* pd = xn->grad.data() + n * c * HW;
                    for (int64_t i = 0; i < c * HW; ++i) pd[i] += pg[i];
                }
                coff += c;
            }
        }
    });
    return out;
}

/// Swap the last two axes of a 2-D or 3-D tensor.
template <typename T>
Tensor<T> transpose_last2(const Tensor<T>& x) {
    const Shape& s = x.shape();
    SEANET_CHECK(s.size() == 2 || s.size() == 3, "transpose_last2: expected 2-D/3-D, got ",
                 shape_str(s));
    const int64_t B = s.size() == 3 ? s[0] : 1;
    const int64_t P = s[s.size() - 2], Q = s[s.size() - 1];
    Shape os = s;
    os[s.size() - 2] = Q;
    os[s.size() - 1] = P;
    Tensor<T> out(os);
    const T* px = x.data();
    T* po = out.data();
    for (int64_t b = 0; b < B; ++b)
        for (int64_t i = 0; i < P; ++i)
            for (int64_t j = 0; j < Q; ++j)
                po[(b * Q + j) * P + i] = px[(b * P + i) * Q + j];
    auto xn = x.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x}, [self, xn, B, P, Q]() {
        xn->ensure_grad();
        for (int64_t b = 0; b < B; ++b)
            for (int64_t i = 0; i < P; ++i)
                for (int64_t j = 0; j < Q; ++j)
                    xn->grad[(b * P + i) * Q + j] += self->grad[(b * Q + j) * P + i];
    });
    return out;
}

// ----------------------------------------------------------------- softmax

/// Softmax along dimension `dim` (negative indices allowed).
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int dim) {
    const Shape& s = x.shape();
    const int nd = static_cast<int>(s.size());
    if (dim < 0) dim += nd;
    SEANET_CHECK(dim >= 0 && dim < nd, "softmax: dim out of range for ", shape_str(s));
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < dim; ++i) outer *= s[i];
    for (int i = dim + 1; i < nd; ++i) inner *= s[i];
    const int64_t L = s[dim];

    Tensor<T> out(s);
    const T* px = x.data();
    T* po = out.data();
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t in = 0; in < inner; ++in) {
            const int64_t base = o * L * inner + in;
            T mx = px[base];
            for (int64_t k = 1; k < L; ++k) mx = std::max(mx, px[base + k * inner]);
            T z = T(0);
            for (int64_t k = 0; k < L; ++k) {
                const T e = std::exp(px[base + k * inner] - mx);
                po[base + k * inner] = e;
                z += e;
            }
            for (int64_t k = 0; k < L; ++k) po[base + k * inner] /= z;
        }
    }
    auto xn = x.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x}, [self, xn, outer, inner, L]() {
        xn->ensure_grad();
        for (int64_t o = 0; o < outer; ++o) {
            for (int64_t in = 0; in < inner; ++in) {
                const int64_t base = o * L * inner + in;
                T dot = T(0);
                for (int64_t k = 0; k < L; ++k)
                    dot += self->grad[base + k * inner] * self->value[base + k * inner];
                for (int64_t k = 0; k < L; ++k) {
                    const int64_t idx = base + k * inner;
                    xn->grad[idx] += self->value[idx] * (self->grad[idx] - dot);
                }
            }
        }
    });
    return out;
}

// ------------------------------------------------------------------ matmul

namespace detail {

// C(P,R) += or = A(P,Q) x B(Q,R) over raw row-major buffers
template <typename T>
void gemm(const T* a, const T* b, T* c, int64_t P, int64_t Q, int64_t R, bool accumulate) {
    ConstMatMap<T> A(a, P, Q), B(b, Q, R);
    MatMap<T> C(c, P, R);
    if (accumulate)
        C.noalias() += A * B;
    else
        C.noalias() = A * B;
}

template <typename T>
void gemm_at_b(const T* a, const T* b, T* c, int64_t P, int64_t Q, int64_t R, bool accumulate) {
    // C(Q,R) (+)= A(P,Q)^T x B(P,R)
    ConstMatMap<T> A(a, P, Q), B(b, P, R);
    MatMap<T> C(c, Q, R);
    if (accumulate)
        C.noalias() += A.transpose() * B;
    else
        C.noalias() = A.transpose() * B;
}

template <typename T>
void gemm_a_bt(const T* a, const T* b, T* c, int64_t P, int64_t Q, int64_t R, bool accumulate) {
    // C(P,Q) (+)= A(P,R) x B(Q,R)^T
    ConstMatMap<T> A(a, P, R), B(b, Q, R);
    MatMap<T> C(c, P, Q);
    if (accumulate)
        C.noalias() += A * B.transpose();
    else
        C.noalias() = A * B.transpose();
}

} // namespace detail

/// Matrix product. Supported forms:
///   (P,Q) x (Q,R)          -> (P,R)
///   (N,P,Q) x (Q,R)        -> (N,P,R)   (second operand broadcast over batch)
///   (N,P,Q) x (N,Q,R)      -> (N,P,R)
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    SEANET_CHECK((sa.size() == 2 || sa.size() == 3) && (sb.size() == 2 || sb.size() == 3),
                 "matmul: unsupported ranks ", shape_str(sa), " x ", shape_str(sb));
    SEANET_CHECK(!(sa.size() == 2 && sb.size() == 3), "matmul: unsupported ranks ",
                 shape_str(sa), " x ", shape_str(sb));
    const bool batched_a = sa.size() == 3;
    const bool batched_b = sb.size() == 3;
    const int64_t N = batched_a ? sa[0] : 1;
    const int64_t P = sa[sa.size() - 2], Q = sa[sa.size() - 1];
    const int64_t Qb = sb[sb.size() - 2], R = sb[sb.size() - 1];
    SEANET_CHECK(Q == Qb, "matmul: inner dims differ, ", shape_str(sa), " x ", shape_str(sb));
    if (batched_b) SEANET_CHECK(sb[0] == N, "matmul: batch dims differ, ", shape_str(sa), " x ",
                                shape_str(sb));

    Shape os = batched_a ? Shape{N, P, R} : Shape{P, R};
    Tensor<T> out(os);
    for (int64_t n = 0; n < N; ++n)
        detail::gemm(a.data() + n * P * Q, b.data() + (batched_b ? n * Q * R : 0),
                     out.data() + n * P * R, P, Q, R, false);

    auto an = a.node(), bn = b.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {a, b}, [self, an, bn, N, P, Q, R, batched_b]() {
        if (an->requires_grad) {
            an->ensure_grad();
            for (int64_t n = 0; n < N; ++n)
                detail::gemm_a_bt(self->grad.data() + n * P * R,
                                  bn->value.data() + (batched_b ? n * Q * R : 0),
                                  an->grad.data() + n * P * Q, P, Q, R, true);
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int64_t n = 0; n < N; ++n) // serial: deterministic accumulation when broadcast
                detail::gemm_at_b(an->value.data() + n * P * Q, self->grad.data() + n * P * R,
                                  bn->grad.data() + (batched_b ? n * Q * R : 0), P, Q, R, true);
        }
    });
    return out;
}

} // namespace seanet
