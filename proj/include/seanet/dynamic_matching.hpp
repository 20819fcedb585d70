#pragma once

#include "seanet/correlation.hpp"
#include "seanet/nn.hpp"

#include <vector>

namespace seanet {

/// Per-sample dynamic kernels distilled from the deepest encoder level.
/// These are activations, not trained parameters.
template <typename T>
struct SemanticKernels {
    Tensor<T> k3; // (N, c3, 5, 5)
    Tensor<T> k4; // (N, c4, 5, 5)
};

/// Semantic kernel construction: two parallel, independently parameterized
/// DSConv branches compress the deepest features to the two shallower
/// channel widths, then 5x5 adaptive average pooling fixes the kernel size.
template <typename T>
class SKC : public Module<T> {
public:
    SKC(int64_t in_ch, int64_t c3, int64_t c4) : in_ch_(in_ch) {
        ds3 = this->template register_module<DSConv<T>>("ds3", in_ch, c3);
        ds4 = this->template register_module<DSConv<T>>("ds4", in_ch, c4);
    }

    SemanticKernels<T> forward(const Tensor<T>& f5) const {
        SEANET_CHECK(f5.ndim() == 4 && f5.dim(1) == in_ch_, "skc_compress: expected (N,", in_ch_,
                     ",H,W) input, got ", shape_str(f5.shape()));
        SEANET_CHECK(f5.dim(2) >= 5 && f5.dim(3) >= 5,
                     "skc_compress: spatial size must be at least 5x5, got ",
                     shape_str(f5.shape()));
        return {adaptive_avg_pool2d(ds3->forward(f5), 5, 5),
                adaptive_avg_pool2d(ds4->forward(f5), 5, 5)};
    }

    std::shared_ptr<DSConv<T>> ds3, ds4;

private:
    int64_t in_ch_;
};

/// Intermediates of one DSMM pass, exposed for oracle tests.
template <typename T>
struct DSMMTrace {
    SemanticKernels<T> kernels;
    Tensor<T> presum3, presum4; // Σ_r ddconv(f, k, r) before the pointwise conv
    Tensor<T> fsm3, fsm4;       // semantic-matching outputs
    Tensor<T> aligned3, aligned4;
    Tensor<T> out;
};

/// Dynamic semantic matching: SKC kernels slide over the two mid-level
/// feature maps as dilated depthwise convolutions (rates 1,2,3 summed, then
/// a 1x1 pointwise conv per branch), the branches are aligned to a common
/// (c4, h3, w3) shape and fused by channel correlation.
///
/// Ablation switches: `use_sm` drops the matching stage (features pass
/// through untouched), `use_dilation` replaces rates {1,2,3} with {1,1,1},
/// `use_ccorr` swaps the correlation fusion for plain concatenation. Output
/// channel count is 2*c4 in every configuration.
template <typename T>
class DSMM : public Module<T> {
public:
    DSMM(int64_t c3 = 32, int64_t c4 = 96, int64_t c5 = 320, bool use_sm = true,
         bool use_dilation = true, bool use_ccorr = true)
        : c3_(c3), c4_(c4), c5_(c5), use_sm_(use_sm), use_ccorr_(use_ccorr),
          dilations_(use_dilation ? std::vector<int64_t>{1, 2, 3}
                                  : std::vector<int64_t>{1, 1, 1}) {
        if (use_sm_) {
            skc = this->template register_module<SKC<T>>("skc", c5, c3, c4);
            pconv3 = this->template register_module<ConvBNAct<T>>("pconv3", c3, c3, 1, 1, 0, 1,
                                                                  Act::ReLU);
            pconv4 = this->template register_module<ConvBNAct<T>>("pconv4", c4, c4, 1, 1, 0, 1,
                                                                  Act::ReLU);
        }
        align = this->template register_module<DSConv<T>>("align", c3, c4);
        if (use_ccorr_) ccorr = this->template register_module<CCorr<T>>("ccorr", c4);
    }

    /// Σ_{r∈rates} ddconv(f, k, r), size-preserving via padding 2r.
    Tensor<T> matched_sum(const Tensor<T>& f, const Tensor<T>& k) const {
        Tensor<T> acc;
        for (int64_t r : dilations_) {
            Tensor<T> y = ddconv(f, k, r, 2 * r);
            acc = acc.defined() ? add(acc, y) : y;
        }
        return acc;
    }

    DSMMTrace<T> forward_detail(const Tensor<T>& f3, const Tensor<T>& f4,
                                const Tensor<T>& f5) const {
        SEANET_CHECK(f3.ndim() == 4 && f3.dim(1) == c3_, "dsmm: expected (N,", c3_,
                     ",H,W) level-3 input, got ", shape_str(f3.shape()));
        SEANET_CHECK(f4.ndim() == 4 && f4.dim(1) == c4_, "dsmm: expected (N,", c4_,
                     ",H,W) level-4 input, got ", shape_str(f4.shape()));
        SEANET_CHECK(f4.dim(2) * 2 == f3.dim(2) && f4.dim(3) * 2 == f3.dim(3),
                     "dsmm: level-4 spatial size must be half of level 3, got ",
                     shape_str(f4.shape()), " vs ", shape_str(f3.shape()));

        DSMMTrace<T> tr;
        if (use_sm_) {
            tr.kernels = skc->forward(f5);
            tr.presum3 = matched_sum(f3, tr.kernels.k3);
            tr.presum4 = matched_sum(f4, tr.kernels.k4);
            tr.fsm3 = pconv3->forward(tr.presum3);
            tr.fsm4 = pconv4->forward(tr.presum4);
        } else {
            tr.fsm3 = f3;
            tr.fsm4 = f4;
        }
        tr.aligned3 = align->forward(tr.fsm3);
        tr.aligned4 = upsample(tr.fsm4, 2);
        tr.out = use_ccorr_
                     ? ccorr->forward(tr.aligned3, tr.aligned4)
                     : concat_channels(std::vector<Tensor<T>>{tr.aligned3, tr.aligned4});
        return tr;
    }

    Tensor<T> forward(const Tensor<T>& f3, const Tensor<T>& f4, const Tensor<T>& f5) const {
        return forward_detail(f3, f4, f5).out;
    }

    int64_t out_channels() const { return 2 * c4_; }
    const std::vector<int64_t>& dilations() const { return dilations_; }

    std::shared_ptr<SKC<T>> skc;               // null when use_sm is off
    std::shared_ptr<ConvBNAct<T>> pconv3, pconv4;
    std::shared_ptr<DSConv<T>> align;
    std::shared_ptr<CCorr<T>> ccorr;           // null when use_ccorr is off

private:
    int64_t c3_, c4_, c5_;
    bool use_sm_, use_ccorr_;
    std::vector<int64_t> dilations_;
};

} // namespace seanet
