#pragma once

#include "seanet/nn.hpp"

namespace seanet {

/// Intermediate results of one channel-correlation pass, exposed so tests
/// can pin the matrix algebra without re-deriving it from the fused output.
template <typename T>
struct CCorrTrace {
    Tensor<T> affinity; // A:(N,C,C)
    Tensor<T> row_norm; // M_r(A): rows sum to 1
    Tensor<T> col_norm; // M_c(A): columns sum to 1
    Tensor<T> attn1;    // reshape(M_r(A) ⊛ f̂₁ᵀ):(N,C,H,W)
    Tensor<T> attn2;    // reshape(M_c(A)ᵀ ⊛ f̂₂):(N,C,H,W)
    Tensor<T> pre1;     // attn1 ⊕ f1, input of the first DSConv
    Tensor<T> pre2;     // attn2 ⊕ f2, input of the second DSConv
    Tensor<T> out;      // [f_sc¹ ; f_sc²]:(N,2C,H,W)
};

/// Channel-wise correlation block: a trainable mixing matrix Wm builds a
/// per-sample channel affinity A = f̂₂ ⊛ (f̂₁ ⊛ Wm), which re-weights both
/// inputs after row-/column-wise softmax normalization. Each branch adds its
/// input back and passes through its own depthwise-separable convolution;
/// the two branches are concatenated along channels (f1 branch first).
template <typename T>
class CCorr : public Module<T> {
public:
    explicit CCorr(int64_t channels) : channels_(channels) {
        wm = this->register_parameter("wm", Tensor<T>(Shape{channels, channels}));
        ds1 = this->template register_module<DSConv<T>>("ds1", channels, channels);
        ds2 = this->template register_module<DSConv<T>>("ds2", channels, channels);
    }

    CCorrTrace<T> forward_detail(const Tensor<T>& f1, const Tensor<T>& f2) const {
        SEANET_CHECK(f1.ndim() == 4 && f2.ndim() == 4 && f1.shape() == f2.shape(),
                     "ccorr: inputs must share one NCHW shape, got ", shape_str(f1.shape()),
                     " vs ", shape_str(f2.shape()));
        const int64_t N = f1.dim(0), C = f1.dim(1), H = f1.dim(2), W = f1.dim(3);
        SEANET_CHECK(C == channels_, "ccorr: expected ", channels_, " channels, got ", C);
        SEANET_CHECK(f1.numel() > 0, "ccorr: empty input");

        CCorrTrace<T> tr;
        auto flat1 = reshape(f1, Shape{N, C, H * W});   // f̂₁ᵀ
        auto flat2 = reshape(f2, Shape{N, C, H * W});   // f̂₂
        auto f1_hat = transpose_last2(flat1);           // f̂₁:(N,HW,C)
        tr.affinity = matmul(flat2, matmul(f1_hat, wm));
        tr.row_norm = softmax(tr.affinity, -1);
        tr.col_norm = softmax(tr.affinity, -2);
        tr.attn1 = reshape(matmul(tr.row_norm, flat1), f1.shape());
        tr.attn2 = reshape(matmul(transpose_last2(tr.col_norm), flat2), f2.shape());
        tr.pre1 = add(tr.attn1, f1);
        tr.pre2 = add(tr.attn2, f2);
        tr.out = concat_channels(
            std::vector<Tensor<T>>{ds1->forward(tr.pre1), ds2->forward(tr.pre2)});
        return tr;
    }

    Tensor<T> forward(const Tensor<T>& f1, const Tensor<T>& f2) const {
        return forward_detail(f1, f2).out;
    }

    int64_t channels() const { return channels_; }

    Tensor<T> wm;
    std::shared_ptr<DSConv<T>> ds1, ds2;

protected:
    void reset_parameters(std::mt19937_64& rng) override {
        // Wm acts as a 1x1 linear map over channels: Kaiming fan-in = C
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(channels_)));
        for (auto& v : wm.vec()) v = static_cast<T>(dist(rng));
    }

private:
    int64_t channels_;
};

} // namespace seanet
