#pragma once

// Convolution ops: dense 2-D convolution (im2col + GEMM), depthwise
// convolution, and the per-sample dynamic depthwise convolution (DDconv).
// All follow cross-correlation semantics with zero padding.

#include "seanet/ops_basic.hpp"

namespace seanet {

namespace detail {

inline int64_t conv_out_size(int64_t in, int64_t k, int64_t stride, int64_t pad, int64_t dil) {
    return (in + 2 * pad - dil * (k - 1) - 1) / stride + 1;
}

// Scatter one sample (C,H,W) into column matrix (C*kh*kw, Ho*Wo).
template <typename T>
void im2col(const T* x, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw, int64_t stride,
            int64_t pad, int64_t dil, int64_t Ho, int64_t Wo, T* cols) {
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t ki = 0; ki < kh; ++ki) {
            for (int64_t kj = 0; kj < kw; ++kj) {
                T* row = cols + ((c * kh + ki) * kw + kj) * (Ho * Wo);
                for (int64_t oh = 0; oh < Ho; ++oh) {
                    const int64_t ih = oh * stride - pad + ki * dil;
                    if (ih < 0 || ih >= H) {
                        std::fill(row + oh * Wo, row + (oh + 1) * Wo, T(0));
                        continue;
                    }
                    const T* xr = x + (c * H + ih) * W;
                    for (int64_t ow = 0; ow < Wo; ++ow) {
                        const int64_t iw = ow * stride - pad + kj * dil;
                        row[oh * Wo + ow] = (iw >= 0 && iw < W) ? xr[iw] : T(0);
                    }
                }
            }
        }
    }
}

// Inverse of im2col: accumulate column-matrix gradients back into (C,H,W).
template <typename T>
void col2im_accum(const T* cols, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw,
                  int64_t stride, int64_t pad, int64_t dil, int64_t Ho, int64_t Wo, T* dx) {
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t ki = 0; ki < kh; ++ki) {
            for (int64_t kj = 0; kj < kw; ++kj) {
                const T* row = cols + ((c * kh + ki) * kw + kj) * (Ho * Wo);
                for (int64_t oh = 0; oh < Ho; ++oh) {
                    const int64_t ih = oh * stride - pad + ki * dil;
                    if (ih < 0 || ih >= H) continue;
                    T* xr = dx + (c * H + ih) * W;
                    for (int64_t ow = 0; ow < Wo; ++ow) {
                        const int64_t iw = ow * stride - pad + kj * dil;
                        if (iw >= 0 && iw < W) xr[iw] += row[oh * Wo + ow];
                    }
                }
            }
        }
    }
}

} // namespace detail

/// Dense 2-D convolution. x:(N,Cin,H,W), w:(Cout,Cin,kh,kw), optional
/// bias:(Cout). Pass an undefined Tensor for no bias.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 int64_t stride = 1, int64_t pad = 0, int64_t dil = 1) {
    const Shape& sx = x.shape();
    const Shape& sw = w.shape();
    SEANET_CHECK(sx.size() == 4, "conv2d: input must be NCHW, got ", shape_str(sx));
    SEANET_CHECK(sw.size() == 4, "conv2d: weight must be (Cout,Cin,kh,kw), got ", shape_str(sw));
    SEANET_CHECK(sx[1] == sw[1], "conv2d: input channels ", sx[1], " != weight channels ", sw[1]);
    const int64_t N = sx[0], Cin = sx[1], H = sx[2], W = sx[3];
    const int64_t Cout = sw[0], kh = sw[2], kw = sw[3];
    const int64_t Ho = detail::conv_out_size(H, kh, stride, pad, dil);
    const int64_t Wo = detail::conv_out_size(W, kw, stride, pad, dil);
    SEANET_CHECK(Ho > 0 && Wo > 0, "conv2d: kernel does not fit input ", shape_str(sx));
    const bool has_bias = bias.defined();
    if (has_bias)
        SEANET_CHECK(bias.numel() == Cout, "conv2d: bias size ", bias.numel(), " != Cout ", Cout);

    const int64_t CKK = Cin * kh * kw, OHW = Ho * Wo;
    Tensor<T> out(Shape{N, Cout, Ho, Wo});
    std::vector<T> cols(static_cast<size_t>(CKK * OHW));
    for (int64_t n = 0; n < N; ++n) {
        detail::im2col(x.data() + n * Cin * H * W, Cin, H, W, kh, kw, stride, pad, dil, Ho, Wo,
                       cols.data());
        detail::gemm(w.data(), cols.data(), out.data() + n * Cout * OHW, Cout, CKK, OHW, false);
        if (has_bias) {
            T* po = out.data() + n * Cout * OHW;
            for (int64_t co = 0; co < Cout; ++co)
                for (int64_t i = 0; i < OHW; ++i) po[co * OHW + i] += bias.data()[co];
        }
    }

    auto xn = x.node(), wn = w.node();
    auto bn = has_bias ? bias.node() : std::shared_ptr<Node<T>>();
    Node<T>* self = out.node().get();
    std::vector<Tensor<T>> inputs{x, w};
    if (has_bias) inputs.push_back(bias);
    detail::wire(out, inputs, [self, xn, wn, bn, N, Cin, H, W, Cout, kh, kw, stride, pad, dil,
                               Ho, Wo]() {
        const int64_t CKK = Cin * kh * kw, OHW = Ho * Wo;
        std::vector<T> cols(static_cast<size_t>(CKK * OHW));
        if (xn->requires_grad) xn->ensure_grad();
        if (wn->requires_grad) wn->ensure_grad();
        if (bn && bn->requires_grad) bn->ensure_grad();
        for (int64_t n = 0; n < N; ++n) { // serial over batch: deterministic accumulation
            const T* dy = self->grad.data() + n * Cout * OHW;
            if (wn->requires_grad) {
                detail::im2col(xn->value.data() + n * Cin * H * W, Cin, H, W, kh, kw, stride,
                               pad, dil, Ho, Wo, cols.data());
                detail::gemm_a_bt(dy, cols.data(), wn->grad.data(), Cout, CKK, OHW, true);
            }
            if (xn->requires_grad) {
                detail::gemm_at_b(wn->value.data(), dy, cols.data(), Cout, CKK, OHW, false);
                detail::col2im_accum(cols.data(), Cin, H, W, kh, kw, stride, pad, dil, Ho, Wo,
                                     xn->grad.data() + n * Cin * H * W);
            }
            if (bn && bn->requires_grad) {
                for (int64_t co = 0; co < Cout; ++co) {
                    T acc = T(0);
                    for (int64_t i = 0; i < OHW; ++i) acc += dy[co * OHW + i];
                    bn->grad[co] += acc;
                }
            }
        }
    });
    return out;
}

/// Depthwise 2-D convolution (groups == channels, multiplier 1).
/// x:(N,C,H,W), w:(C,1,kh,kw), optional bias:(C).
template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                           int64_t stride = 1, int64_t pad = 0, int64_t dil = 1) {
    const Shape& sx = x.shape();
    const Shape& sw = w.shape();
    SEANET_CHECK(sx.size() == 4, "depthwise_conv2d: input must be NCHW, got ", shape_str(sx));
    SEANET_CHECK(sw.size() == 4 && sw[1] == 1, "depthwise_conv2d: weight must be (C,1,kh,kw), got ",
                 shape_str(sw));
    SEANET_CHECK(sx[1] == sw[0], "depthwise_conv2d: channels ", sx[1], " != kernel channels ",
                 sw[0]);
    const int64_t N = sx[0], C = sx[1], H = sx[2], W = sx[3];
    const int64_t kh = sw[2], kw = sw[3];
    const int64_t Ho = detail::conv_out_size(H, kh, stride, pad, dil);
    const int64_t Wo = detail::conv_out_size(W, kw, stride, pad, dil);
    SEANET_CHECK(Ho > 0 && Wo > 0, "depthwise_conv2d: kernel does not fit input ", shape_str(sx));
    const bool has_bias = bias.defined();
    if (has_bias)
        SEANET_CHECK(bias.numel() == C, "depthwise_conv2d: bias size ", bias.numel(), " != C ", C);

    Tensor<T> out(Shape{N, C, Ho, Wo});
    const T* px = x.data();
    const T* pw = w.data();
    T* po = out.data();
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c) {
            const T* xc = px + (n * C + c) * H * W;
            const T* wc = pw + c * kh * kw;
            T* oc = po + (n * C + c) * Ho * Wo;
            const T b = has_bias ? bias.data()[c] : T(0);
            for (int64_t oh = 0; oh < Ho; ++oh) {
                for (int64_t ow = 0; ow < Wo; ++ow) {
                    T acc = b;
                    for (int64_t ki = 0; ki < kh; ++ki) {
                        const int64_t ih = oh * stride - pad + ki * dil;
                        if (ih < 0 || ih >= H) continue;
                        for (int64_t kj = 0; kj < kw; ++kj) {
                            const int64_t iw = ow * stride - pad + kj * dil;
                            if (iw < 0 || iw >= W) continue;
                            acc += xc[ih * W + iw] * wc[ki * kw + kj];
                        }
                    }
                    oc[oh * Wo + ow] = acc;
                }
            }
        }
    }

    auto xn = x.node(), wn = w.node();
    auto bnn = has_bias ? bias.node() : std::shared_ptr<Node<T>>();
    Node<T>* self = out.node().get();
    std::vector<Tensor<T>> inputs{x, w};
    if (has_bias) inputs.push_back(bias);
    detail::wire(out, inputs,
                 [self, xn, wn, bnn, N, C, H, W, kh, kw, stride, pad, dil, Ho, Wo]() {
        if (xn->requires_grad) xn->ensure_grad();
        if (wn->requires_grad) wn->ensure_grad();
        if (bnn && bnn->requires_grad) bnn->ensure_grad();
        for (int64_t n = 0; n < N; ++n) {
            for (int64_t c = 0; c < C; ++c) {
                const T* xc = xn->value.data() + (n * C + c) * H * W;
                const T* wc = wn->value.data() + c * kh * kw;
                const T* dy = self->grad.data() + (n * C + c) * Ho * Wo;
                T* dxc = xn->requires_grad ? xn->grad.data() + (n * C + c) * H * W : nullptr;
                T* dwc = wn->requires_grad ? wn->grad.data() + c * kh * kw : nullptr;
                for (int64_t oh = 0; oh < Ho; ++oh) {
                    for (int64_t ow = 0; ow < Wo; ++ow) {
                        const T g = dy[oh * Wo + ow];
                        for (int64_t ki = 0; ki < kh; ++ki) {
                            const int64_t ih = oh * stride - pad + ki * dil;
                            if (ih < 0 || ih >= H) continue;
                            for (int64_t kj = 0; kj < kw; ++kj) {
                                const int64_t iw = ow * stride - pad + kj * dil;
                                if (iw < 0 || iw >= W) continue;
                                if (dxc) dxc[ih * W + iw] += g * wc[ki * kw + kj];
                                if (dwc) dwc[ki * kw + kj] += g * xc[ih * W + iw];
                            }
                        }
                        if (bnn && bnn->requires_grad) bnn->grad[c] += g;
                    }
                }
            }
        }
    });
    return out;
}

/// Dynamic depthwise convolution: the kernel is per-sample data, not a
/// trained parameter. x:(N,C,H,W), k:(N,C,kh,kw); stride 1, zero padding
/// `pad`, dilation `dil`; no bias. Gradients flow into both x and k.
template <typename T>
Tensor<T> ddconv(const Tensor<T>& x, const Tensor<T>& k, int64_t dil, int64_t pad) {
    const Shape& sx = x.shape();
    const Shape& sk = k.shape();
    SEANET_CHECK(sx.size() == 4, "ddconv: input must be NCHW, got ", shape_str(sx));
    SEANET_CHECK(sk.size() == 4, "ddconv: kernel must be (N,C,kh,kw), got ", shape_str(sk));
    SEANET_CHECK(sx[0] == sk[0], "ddconv: batch mismatch, input ", sx[0], " vs kernel ", sk[0]);
    SEANET_CHECK(sx[1] == sk[1], "ddconv: channel mismatch, input has ", sx[1],
                 " channels but kernel has ", sk[1]);
    const int64_t N = sx[0], C = sx[1], H = sx[2], W = sx[3];
    const int64_t kh = sk[2], kw = sk[3];
    const int64_t Ho = detail::conv_out_size(H, kh, 1, pad, dil);
    const int64_t Wo = detail::conv_out_size(W, kw, 1, pad, dil);
    SEANET_CHECK(Ho > 0 && Wo > 0, "ddconv: kernel does not fit input ", shape_str(sx));

    Tensor<T> out(Shape{N, C, Ho, Wo});
    const T* px = x.data();
    const T* pk = k.data();
    T* po = out.data();
    for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < C; ++c) {
            const T* xc = px + (n * C + c) * H * W;
            const T* kc = pk + (n * C + c) * kh * kw;
            T* oc = po + (n * C + c) * Ho * Wo;
            for (int64_t oh = 0; oh < Ho; ++oh) {
                for (int64_t ow = 0; ow < Wo; ++ow) {
                    T acc = T(0);
                    for (int64_t ki = 0; ki < kh; ++ki) {
                        const int64_t ih = oh - pad + ki * dil;
                        if (ih < 0 || ih >= H) continue;
                        for (int64_t kj = 0; kj < kw; ++kj) {
                            const int64_t iw = ow - pad + kj * dil;
                            if (iw < 0 || iw >= W) continue;
                            acc += xc[ih * W + iw] * kc[ki * kw + kj];
                        }
                    }
                    oc[oh * Wo + ow] = acc;
                }
            }
        }
    }

    auto xn = x.node(), kn = k.node();
    Node<T>* self = out.node().get();
    detail::wire(out, {x, k}, [self, xn, kn, N, C, H, W, kh, kw, pad, dil, Ho, Wo]() {
        if (xn->requires_grad) xn->ensure_grad();
        if (kn->requires_grad) kn->ensure_grad();
        for (int64_t n = 0; n < N; ++n) {
            for (int64_t c = 0; c < C; ++c) {
                const T* xc = xn->value.data() + (n * C + c) * H * W;
                const T* kc = kn->value.data() + (n * C + c) * kh * kw;
                const T* dy = self->grad.data() + (n * C + c) * Ho * Wo;
                T* dxc = xn->requires_grad ? xn->grad.data() + (n * C + c) * H * W : nullptr;
                T* dkc = kn->requires_grad ? kn->grad.data() + (n * C + c) * kh * kw : nullptr;
                for (int64_t oh = 0; oh < Ho; ++oh) {
                    for (int64_t ow = 0; ow < Wo; ++ow) {
                        const T g = dy[oh * Wo + ow];
                        for (int64_t ki = 0; ki < kh; ++ki) {
                            const int64_t ih = oh - pad + ki * dil;
                            if (ih < 0 || ih >= H) continue;
                            for (int64_t kj = 0; kj < kw; ++kj) {
                                const int64_t iw = ow - pad + kj * dil;
                                if (iw < 0 || iw >= W) continue;
                                if (dxc) dxc[ih * W + iw] += g * kc[ki * kw + kj];
                                if (dkc) dkc[ki * kw + kj] += g * xc[ih * W + iw];
                            }
                        }
                    }
                }
            }
        }
    });
    return out;
}

} // namespace seanet
