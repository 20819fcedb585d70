#pragma once

#include "seanet/correlation.hpp"
#include "seanet/nn.hpp"

namespace seanet {

/// Edge response by pooling-subtraction: the feature minus its 3x3 (stride 1,
/// zero-padded, fixed divisor) local mean. Parameter-free and linear.
template <typename T>
Tensor<T> extract_edge(const Tensor<T>& f, int64_t pool_kernel = 3) {
    return sub(f, local_avg_pool(f, pool_kernel));
}

/// Edge enhancement unit: gate the feature with a sigmoid-activated 1x1
/// convolution of its edge map, keeping a residual path.
/// enhanced = sigmoid(conv(edge)) * f + f
template <typename T>
class EEU : public Module<T> {
public:
    explicit EEU(int64_t channels, int64_t pool_kernel = 3) : pool_kernel_(pool_kernel) {
        conv = this->template register_module<Conv2d<T>>("conv", channels, channels, 1);
    }

    /// Returns {enhanced, edge}; `edge` is the raw pre-convolution edge map.
    std::pair<Tensor<T>, Tensor<T>> forward(const Tensor<T>& f_hat) const {
        Tensor<T> edge = extract_edge(f_hat, pool_kernel_);
        Tensor<T> gate = sigmoid(conv->forward(edge));
        return {add(mul(gate, f_hat), f_hat), edge};
    }

    int64_t pool_kernel() const { return pool_kernel_; }

    std::shared_ptr<Conv2d<T>> conv;

private:
    int64_t pool_kernel_;
};

/// Intermediates of one ESAM pass, exposed for oracle tests.
template <typename T>
struct EsamTrace {
    Tensor<T> aligned1, aligned2; // f̂_e¹, f̂_e² (both c2 channels, level-1 size)
    Tensor<T> edge1, edge2;       // raw edge maps fed to the alignment loss
    Tensor<T> enhanced1, enhanced2;
    Tensor<T> out; // (N, 2*c2, h1, w1)
};

/// Edge self-alignment module: align the two shallow encoder levels to a
/// common (c2, h1, w1) shape, extract parameter-free edge maps, enhance both
/// features with edge gates and fuse by channel correlation. The raw edge
/// maps are returned for the self-alignment loss; no edge ground truth is
/// consumed anywhere.
///
/// Ablation switches: `use_eeu` bypasses the gating (features pass through
/// aligned; edge maps are still produced), `use_ccorr` swaps fusion for
/// concatenation. Output channel count stays 2*c2.
template <typename T>
class ESAM : public Module<T> {
public:
    ESAM(int64_t c1 = 16, int64_t c2 = 24, bool use_eeu = true, bool use_ccorr = true,
         int64_t pool_kernel = 3)
        : c1_(c1), c2_(c2), use_eeu_(use_eeu), use_ccorr_(use_ccorr), pool_kernel_(pool_kernel) {
        align1 = this->template register_module<DSConv<T>>("align1", c1, c2);
        align2 = this->template register_module<DSConv<T>>("align2", c2, c2);
        if (use_eeu_) {
            eeu1 = this->template register_module<EEU<T>>("eeu1", c2, pool_kernel);
            eeu2 = this->template register_module<EEU<T>>("eeu2", c2, pool_kernel);
        }
        if (use_ccorr_) ccorr = this->template register_module<CCorr<T>>("ccorr", c2);
    }

    /// f̂_e¹ = DSconv(f1); f̂_e² = Upsample×2(DSconv(f2)).
    std::pair<Tensor<T>, Tensor<T>> align_low(const Tensor<T>& f1, const Tensor<T>& f2) const {
        SEANET_CHECK(f1.ndim() == 4 && f1.dim(1) == c1_, "align_low: expected (N,", c1_,
                     ",H,W) level-1 input, got ", shape_str(f1.shape()));
        SEANET_CHECK(f2.ndim() == 4 && f2.dim(1) == c2_, "align_low: expected (N,", c2_,
                     ",H,W) level-2 input, got ", shape_str(f2.shape()));
        SEANET_CHECK(f2.dim(2) * 2 == f1.dim(2) && f2.dim(3) * 2 == f1.dim(3),
                     "align_low: level-2 spatial size must be half of level 1, got ",
                     shape_str(f2.shape()), " vs ", shape_str(f1.shape()));
        return {align1->forward(f1), upsample(align2->forward(f2), 2)};
    }

    EsamTrace<T> forward_detail(const Tensor<T>& f1, const Tensor<T>& f2) const {
        EsamTrace<T> tr;
        auto [a1, a2] = align_low(f1, f2);
        tr.aligned1 = a1;
        tr.aligned2 = a2;
        if (use_eeu_) {
            std::tie(tr.enhanced1, tr.edge1) = eeu1->forward(a1);
            std::tie(tr.enhanced2, tr.edge2) = eeu2->forward(a2);
        } else {
            tr.edge1 = extract_edge(a1, pool_kernel_);
            tr.edge2 = extract_edge(a2, pool_kernel_);
            tr.enhanced1 = a1;
            tr.enhanced2 = a2;
        }
        tr.out = use_ccorr_
                     ? ccorr->forward(tr.enhanced1, tr.enhanced2)
                     : concat_channels(std::vector<Tensor<T>>{tr.enhanced1, tr.enhanced2});
        return tr;
    }

    Tensor<T> forward(const Tensor<T>& f1, const Tensor<T>& f2) const {
        return forward_detail(f1, f2).out;
    }

    int64_t out_channels() const { return 2 * c2_; }
    int64_t pool_kernel() const { return pool_kernel_; }

    std::shared_ptr<DSConv<T>> align1, align2;
    std::shared_ptr<EEU<T>> eeu1, eeu2; // null when use_eeu is off
    std::shared_ptr<CCorr<T>> ccorr;    // null when use_ccorr is off

private:
    int64_t c1_, c2_;
    bool use_eeu_, use_ccorr_;
    int64_t pool_kernel_;
};

} // namespace seanet
