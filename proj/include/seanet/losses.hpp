#pragma once

#include "seanet/decoder.hpp"

#include <array>

namespace seanet {

/// All loss components of one step. `total` keeps the fixed association
/// ((b1+i1) + (b2+i2) + (b3+i3)) + lambda * edge_align so tests can compare
/// against an exact recomputation.
template <typename T>
struct LossBundle {
    std::array<Tensor<T>, 3> bce; // index 0 ↔ full-resolution map S1
    std::array<Tensor<T>, 3> iou;
    Tensor<T> edge_align; // zero constant when the term is disabled
    T lambda = T(0);
    Tensor<T> total;
};

/// Binary cross-entropy between a logit map and a {0,1} target, averaged
/// over pixels; evaluated in logit space for stability.
template <typename T>
Tensor<T> bce_loss(const Tensor<T>& logits, const Tensor<T>& target) {
    return bce_with_logits_mean(logits, target);
}

/// Soft IoU loss: 1 - (Σ S·G + eps) / (Σ S + Σ G - Σ S·G + eps).
template <typename T>
Tensor<T> iou_loss(const Tensor<T>& prob, const Tensor<T>& target, T eps = T(1)) {
    SEANET_CHECK(prob.shape() == target.shape(), "iou_loss: shape mismatch ",
                 shape_str(prob.shape()), " vs ", shape_str(target.shape()));
    Tensor<T> inter = sum(mul(prob, target));
    Tensor<T> uni = sub(add(sum(prob), sum(target)), inter);
    Tensor<T> ratio = div(add_scalar(inter, eps), add_scalar(uni, eps));
    return add_scalar(mul_scalar(ratio, T(-1)), T(1));
}

/// Edge self-alignment: mean squared error between the two edge maps after
/// a shared single-slope PReLU. Sharing the slope keeps e1 = e2 ⇒ loss 0.
template <typename T>
Tensor<T> edge_align_loss(const Tensor<T>& e1, const Tensor<T>& e2, const Tensor<T>& slope) {
    SEANET_CHECK(e1.shape() == e2.shape(), "edge_align_loss: shape mismatch ",
                 shape_str(e1.shape()), " vs ", shape_str(e2.shape()));
    Tensor<T> d = sub(prelu_shared(e1, slope), prelu_shared(e2, slope));
    return mean(mul(d, d));
}

/// Resize a binary ground-truth map to a supervision scale: bilinear resize,
/// then threshold at 0.5 back to {0,1}. Never part of the tape.
template <typename T>
Tensor<T> gt_to_scale(const Tensor<T>& gt, int64_t h, int64_t w) {
    NoGradGuard ng;
    Tensor<T> r = bilinear_resize(gt.detach(), h, w);
    Tensor<T> out(r.shape());
    for (int64_t i = 0; i < r.numel(); ++i) out[i] = r[i] > T(0.5) ? T(1) : T(0);
    return out;
}

/// Assemble the full training objective: per-scale BCE + IoU on all three
/// maps (ground truth re-binarized at each scale) plus the lambda-weighted
/// edge alignment term. Pass an undefined `slope` (or lambda = 0, or
/// undefined edges) to drop the alignment term, reproducing the
/// w/o-alignment variant.
template <typename T>
LossBundle<T> total_loss(const SaliencyOutputs<T>& maps, const Tensor<T>& gt,
                         const Tensor<T>& e1, const Tensor<T>& e2, const Tensor<T>& slope,
                         T lambda, T iou_eps = T(1)) {
    SEANET_CHECK(gt.ndim() == 4 && gt.dim(1) == 1, "total_loss: ground truth must be (N,1,H,W), got ",
                 shape_str(gt.shape()));
    LossBundle<T> b;
    b.lambda = lambda;
    const SalOut<T>* scale[3] = {&maps.s1, &maps.s2, &maps.s3};
    for (int i = 0; i < 3; ++i) {
        const SalOut<T>& s = *scale[i];
        Tensor<T> g = gt_to_scale(gt, s.logits.dim(2), s.logits.dim(3));
        b.bce[i] = bce_loss(s.logits, g);
        b.iou[i] = iou_loss(s.prob, g, iou_eps);
    }
    const bool with_edges = e1.defined() && e2.defined() && slope.defined() && lambda != T(0);
    b.edge_align = with_edges ? edge_align_loss(e1, e2, slope) : Tensor<T>(Shape{1}, T(0));
    b.total = add(add(add(b.bce[0], b.iou[0]), add(b.bce[1], b.iou[1])),
                  add(b.bce[2], b.iou[2]));
    b.total = add(b.total, mul_scalar(b.edge_align, lambda));
    return b;
}

} // namespace seanet
