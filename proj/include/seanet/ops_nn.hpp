#pragma once

// Normalization, dropout and the fused stable BCE-with-logits loss.

#include "seanet/ops_basic.hpp"

#include <cmath>
#include <random>

namespace seanet {

/// Batch normalization over (N,H,W) per channel. In training mode batch
/// statistics are used and running statistics are updated (biased variance
/// normalizes, unbiased updates the running estimate); in evaluation mode
/// the running statistics are read. `running_mean/var` are plain buffers,
/// never part of the tape.
template <typename T>
Tensor<T> batch_norm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                       Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                       T momentum = T(0.1), T eps = T(1e-5)) {
    const Shape& s = x.shape();
    SEANET_CHECK(s.size() == 4, "batch_norm2d: input must be NCHW, got ", shape_str(s));
    const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
    SEANET_CHECK(gamma.numel() == C && beta.numel() == C && running_mean.numel() == C &&
                     running_var.numel() == C,
                 "batch_norm2d: affine/stat size mismatch for C=", C);
    const int64_t HW = H * W, M = N * HW;

    std::vector<T> mu(C), invstd(C);
    if (training) {
        SEANET_CHECK(M > 1, "batch_norm2d: training mode needs more than one value per channel");
        for (int64_t c = 0; c < C; ++c) {
            T acc = T(0);
            for (int64_t n = 0; n < N; ++n) {
                const T* xc = x.data() + (n * C + c) * HW;
                for (int64_t i = 0; i < HW; ++i) acc += xc[i];
            }
            const T m = acc / static_cast<T>(M);
            T var = T(0);
            for (int64_t n = 0; n < N; ++n) {
                const T* xc = x.data() + (n * C + c) * HW;
                for (int64_t i = 0; i < HW; ++i) {
                    const T d = xc[i] - m;
                    var += d * d;
                }
            }
            var /= static_cast<T>(M);
            mu[c] = m;
            invstd[c] = T(1) / std::sqrt(var + eps);
            const T unbiased = var * static_cast<T>(M) / static_cast<T>(M - 1);
            running_mean.data()[c] = (T(1) - momentum) * running_mean.data()[c] + momentum * m;
            running_var.data()[c] = (T(1) - momentum) * running_var.data()[c] + momentum * unbiased;
        }
    } else {
        for (int64_t c = 0; c < C; ++c) {
            mu[c] = running_mean.data()[c];
            invstd[c] = T(1) / std::sqrt(running_var.data()[c] + eps);
        }
    }

    Tensor<T> out(s);
    const T* px = x.data();
    T* po = out.data();
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c) {
            const T g = gamma.data()[c], b = beta.data()[c];
            const T m = mu[c], is = invstd[c];
            const T* xc = px + (n * C + c) * HW;
            T* oc = po + (n * C + c) * HW;
            for (int64_t i = 0; i < HW; ++i) oc[i] = (xc[i] - m) * is * g + b;
        }
    }

    auto xn = x.node(), gn = gamma.node(), bn = beta.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x, gamma, beta},
                 [self, xn, gn, bn, N, C, HW, M, mu, invstd, training]() {
        if (gn->requires_grad) gn->ensure_grad();
        if (bn->requires_grad) bn->ensure_grad();
        if (xn->requires_grad) xn->ensure_grad();
        for (int64_t c = 0; c < C; ++c) {
            const T m = mu[c], is = invstd[c], gam = gn->value[c];
            // channel-wise reductions of incoming grad
            T sum_dy = T(0), sum_dy_xhat = T(0);
            for (int64_t n = 0; n < N; ++n) {
                const T* dy = self->grad.data() + (n * C + c) * HW;
                const T* xc = xn->value.data() + (n * C + c) * HW;
                for (int64_t i = 0; i < HW; ++i) {
                    sum_dy += dy[i];
                    sum_dy_xhat += dy[i] * (xc[i] - m) * is;
                }
            }
            if (gn->requires_grad) gn->grad[c] += sum_dy_xhat;
            if (bn->requires_grad) bn->grad[c] += sum_dy;
            if (!xn->requires_grad) continue;
            if (training) {
                const T invM = T(1) / static_cast<T>(M);
                for (int64_t n = 0; n < N; ++n) {
                    const T* dy = self->grad.data() + (n * C + c) * HW;
                    const T* xc = xn->value.data() + (n * C + c) * HW;
                    T* dx = xn->grad.data() + (n * C + c) * HW;
                    for (int64_t i = 0; i < HW; ++i) {
                        const T xhat = (xc[i] - m) * is;
                        dx[i] += gam * is *
                                 (dy[i] - invM * (sum_dy + xhat * sum_dy_xhat));
                    }
                }
            } else {
                for (int64_t n = 0; n < N; ++n) {
                    const T* dy = self->grad.data() + (n * C + c) * HW;
                    T* dx = xn->grad.data() + (n * C + c) * HW;
                    for (int64_t i = 0; i < HW; ++i) dx[i] += dy[i] * gam * is;
                }
            }
        }
    });
    return out;
}

/// Inverted dropout: keep with probability 1-p and scale by 1/(1-p) in
/// training mode; identity in evaluation mode. The mask is drawn from `rng`.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, bool training, std::mt19937_64& rng) {
    SEANET_CHECK(p >= 0.0 && p < 1.0, "dropout: p must be in [0,1), got ", p);
    if (!training || p == 0.0) return x;
    const int64_t n = x.numel();
    std::bernoulli_distribution keep(1.0 - p);
    const T scale = static_cast<T>(1.0 / (1.0 - p));
    std::vector<T> mask(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) mask[static_cast<size_t>(i)] = keep(rng) ? scale : T(0);

    Tensor<T> out(x.shape());
    const T* px = x.data();
    T* po = out.data();
    for (int64_t i = 0; i < n; ++i) po[i] = px[i] * mask[static_cast<size_t>(i)];
    auto xn = x.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x}, [self, xn, mask]() {
        xn->ensure_grad();
        for (size_t i = 0; i < self->grad.size(); ++i) xn->grad[i] += self->grad[i] * mask[i];
    });
    return out;
}

/// Numerically stable mean binary cross-entropy on logits:
/// mean( max(z,0) - z*g + log(1 + exp(-|z|)) ). `target` carries no grad.
template <typename T>
Tensor<T> bce_with_logits_mean(const Tensor<T>& logits, const Tensor<T>& target) {
    detail::check_same_shape("bce_with_logits_mean", logits, target);
    const int64_t n = logits.numel();
    SEANET_CHECK(n > 0, "bce_with_logits_mean: empty input");
    const T* pz = logits.data();
    const T* pg = target.data();
    T acc = T(0);
    for (int64_t i = 0; i < n; ++i) {
        const T z = pz[i];
        acc += std::max(z, T(0)) - z * pg[i] + std::log1p(std::exp(-std::abs(z)));
    }
    Tensor<T> out(Shape{1});
    out.data()[0] = acc / static_cast<T>(n);

    auto zn = logits.node(), gn = target.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {logits, target}, [self, zn, gn]() {
        SEANET_CHECK(!gn->requires_grad, "bce_with_logits_mean: target must not require grad");
        zn->ensure_grad();
        const int64_t n = static_cast<int64_t>(zn->value.size());
        const T g = self->grad[0] / static_cast<T>(n);
        for (int64_t i = 0; i < n; ++i) {
            const T sig = T(1) / (T(1) + std::exp(-zn->value[i]));
            zn->grad[i] += g * (sig - gn->value[i]);
        }
    });
    return out;
}

} // namespace seanet
