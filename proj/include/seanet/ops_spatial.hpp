#pragma once

// Spatial resampling ops: adaptive average pooling, fixed-divisor local
// average pooling, and bilinear resizing (half-pixel source mapping).

#include "seanet/tensor.hpp"

#include <cmath>

namespace seanet {

/// Adaptive average pooling to (oh, ow). Window boundaries follow the
/// standard rule start = floor(i*in/out), end = ceil((i+1)*in/out).
template <typename T>
Tensor<T> adaptive_avg_pool2d(const Tensor<T>& x, int64_t oh, int64_t ow) {
    const Shape& s = x.shape();
    SEANET_CHECK(s.size() == 4, "adaptive_avg_pool2d: input must be NCHW, got ", shape_str(s));
    SEANET_CHECK(oh > 0 && ow > 0, "adaptive_avg_pool2d: bad output size ", oh, "x", ow);
    const int64_t N = s[0], C = s[1], H = s[2], W = s[3];

    auto win_start = [](int64_t i, int64_t in, int64_t out) { return (i * in) / out; };
    auto win_end = [](int64_t i, int64_t in, int64_t out) {
        return ((i + 1) * in + out - 1) / out;
    };

    Tensor<T> out(Shape{N, C, oh, ow});
    const T* px = x.data();
    T* po = out.data();
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const T* xc = px + nc * H * W;
        T* oc = po + nc * oh * ow;
        for (int64_t i = 0; i < oh; ++i) {
            const int64_t h0 = win_start(i, H, oh), h1 = win_end(i, H, oh);
            for (int64_t j = 0; j < ow; ++j) {
                const int64_t w0 = win_start(j, W, ow), w1 = win_end(j, W, ow);
                T acc = T(0);
                for (int64_t h = h0; h < h1; ++h)
                    for (int64_t w = w0; w < w1; ++w) acc += xc[h * W + w];
                oc[i * ow + j] = acc / static_cast<T>((h1 - h0) * (w1 - w0));
            }
        }
    }

    auto xn = x.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x}, [self, xn, N, C, H, W, oh, ow, win_start, win_end]() {
        xn->ensure_grad();
        for (int64_t nc = 0; nc < N * C; ++nc) {
            const T* dy = self->grad.data() + nc * oh * ow;
            T* dx = xn->grad.data() + nc * H * W;
            for (int64_t i = 0; i < oh; ++i) {
                const int64_t h0 = win_start(i, H, oh), h1 = win_end(i, H, oh);
                for (int64_t j = 0; j < ow; ++j) {
                    const int64_t w0 = win_start(j, W, ow), w1 = win_end(j, W, ow);
                    const T g = dy[i * ow + j] / static_cast<T>((h1 - h0) * (w1 - w0));
                    for (int64_t h = h0; h < h1; ++h)
                        for (int64_t w = w0; w < w1; ++w) dx[h * W + w] += g;
                }
            }
        }
    });
    return out;
}

/// Local average pooling with kernel k, stride 1, zero padding k/2 and a
/// fixed divisor k*k (padded zeros count toward the mean).
template <typename T>
Tensor<T> local_avg_pool(const Tensor<T>& x, int64_t k) {
    const Shape& s = x.shape();
    SEANET_CHECK(s.size() == 4, "local_avg_pool: input must be NCHW, got ", shape_str(s));
    SEANET_CHECK(k >= 1 && k % 2 == 1, "local_avg_pool: kernel must be odd and positive, got ", k);
    const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
    const int64_t pad = k / 2;
    const T inv = T(1) / static_cast<T>(k * k);

    Tensor<T> out(s);
    const T* px = x.data();
    T* po = out.data();
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const T* xc = px + nc * H * W;
        T* oc = po + nc * H * W;
        for (int64_t i = 0; i < H; ++i) {
            for (int64_t j = 0; j < W; ++j) {
                T acc = T(0);
                for (int64_t di = -pad; di <= pad; ++di) {
                    const int64_t h = i + di;
                    if (h < 0 || h >= H) continue;
                    for (int64_t dj = -pad; dj <= pad; ++dj) {
                        const int64_t w = j + dj;
                        if (w < 0 || w >= W) continue;
                        acc += xc[h * W + w];
                    }
                }
                oc[i * W + j] = acc * inv;
            }
        }
    }

    auto xn = x.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x}, [self, xn, N, C, H, W, pad, inv]() {
        xn->ensure_grad();
        for (int64_t nc = 0; nc < N * C; ++nc) {
            const T* dy = self->grad.data() + nc * H * W;
            T* dx = xn->grad.data() + nc * H * W;
            for (int64_t i = 0; i < H; ++i) {
                for (int64_t j = 0; j < W; ++j) {
                    const T g = dy[i * W + j] * inv;
                    for (int64_t di = -pad; di <= pad; ++di) {
                        const int64_t h = i + di;
                        if (h < 0 || h >= H) continue;
                        for (int64_t dj = -pad; dj <= pad; ++dj) {
                            const int64_t w = j + dj;
                            if (w < 0 || w >= W) continue;
                            dx[h * W + w] += g;
                        }
                    }
                }
            }
        }
    });
    return out;
}

namespace detail {

// Half-pixel source coordinate with the conventional negative clamp.
template <typename T>
inline T bilinear_src(int64_t dst, int64_t in, int64_t out) {
    const T src = (static_cast<T>(dst) + T(0.5)) * static_cast<T>(in) / static_cast<T>(out)
                  - T(0.5);
    return src < T(0) ? T(0) : src;
}

} // namespace detail

/// Bilinear resize to (oh, ow), align_corners = false.
template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, int64_t oh, int64_t ow) {
    const Shape& s = x.shape();
    SEANET_CHECK(s.size() == 4, "bilinear_resize: input must be NCHW, got ", shape_str(s));
    SEANET_CHECK(oh > 0 && ow > 0, "bilinear_resize: bad output size ", oh, "x", ow);
    const int64_t N = s[0], C = s[1], H = s[2], W = s[3];
    if (oh == H && ow == W) {
        // still produce a fresh node so the graph stays append-only
        Tensor<T> out = Tensor<T>::from_data(s, x.vec());
        auto xn = x.node();
        Node<T>* self = out.node().get();
        detail::wire(out, {x}, [self, xn]() {
            xn->ensure_grad();
            for (size_t i = 0; i < self->grad.size(); ++i) xn->grad[i] += self->grad[i];
        });
        return out;
    }

    // precompute interpolation taps per output row/col
    std::vector<int64_t> h0(oh), h1(oh);
    std::vector<T> lh(oh);
    for (int64_t i = 0; i < oh; ++i) {
        const T src = detail::bilinear_src<T>(i, H, oh);
        h0[i] = static_cast<int64_t>(src);
        h1[i] = std::min<int64_t>(h0[i] + 1, H - 1);
        lh[i] = src - static_cast<T>(h0[i]);
    }
    std::vector<int64_t> w0(ow), w1(ow);
    std::vector<T> lw(ow);
    for (int64_t j = 0; j < ow; ++j) {
        const T src = detail::bilinear_src<T>(j, W, ow);
        w0[j] = static_cast<int64_t>(src);
        w1[j] = std::min<int64_t>(w0[j] + 1, W - 1);
        lw[j] = src - static_cast<T>(w0[j]);
    }

    Tensor<T> out(Shape{N, C, oh, ow});
    const T* px = x.data();
    T* po = out.data();
    for (int64_t nc = 0; nc < N * C; ++nc) {
        const T* xc = px + nc * H * W;
        T* oc = po + nc * oh * ow;
        for (int64_t i = 0; i < oh; ++i) {
            for (int64_t j = 0; j < ow; ++j) {
                const T a = xc[h0[i] * W + w0[j]], b = xc[h0[i] * W + w1[j]];
                const T c = xc[h1[i] * W + w0[j]], d = xc[h1[i] * W + w1[j]];
                const T top = a + (b - a) * lw[j];
                const T bot = c + (d - c) * lw[j];
                oc[i * ow + j] = top + (bot - top) * lh[i];
            }
        }
    }

    auto xn = x.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x}, [self, xn, N, C, H, W, oh, ow, h0, h1, lh, w0, w1, lw]() {
        xn->ensure_grad();
        for (int64_t nc = 0; nc < N * C; ++nc) {
            const T* dy = self->grad.data() + nc * oh * ow;
            T* dx = xn->grad.data() + nc * H * W;
            for (int64_t i = 0; i < oh; ++i) {
                for (int64_t j = 0; j < ow; ++j) {
                    const T g = dy[i * ow + j];
                    const T wtl = (T(1) - lh[i]) * (T(1) - lw[j]);
                    const T wtr = (T(1) - lh[i]) * lw[j];
                    const T wbl = lh[i] * (T(1) - lw[j]);
                    const T wbr = lh[i] * lw[j];
                    dx[h0[i] * W + w0[j]] += g * wtl;
                    dx[h0[i] * W + w1[j]] += g * wtr;
                    dx[h1[i] * W + w0[j]] += g * wbl;
                    dx[h1[i] * W + w1[j]] += g * wbr;
                }
            }
        }
    });
    return out;
}

/// Bilinear upsampling by an integer factor.
template <typename T>
Tensor<T> upsample(const Tensor<T>& x, int64_t factor) {
    SEANET_CHECK(factor >= 1, "upsample: factor must be >= 1, got ", factor);
    return bilinear_resize(x, x.dim(2) * factor, x.dim(3) * factor);
}

} // namespace seanet
