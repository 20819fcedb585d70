#pragma once

#include "seanet/nn.hpp"

#include <string>

namespace seanet {

/// One lightweight decoder block: DSConv, DSConv, bilinear upsample, DSConv.
/// Channel plans at full width:
///   D5:  (320 -> 320 -> 320, x4, -> 192)
///   D34: (384 -> 192 -> 192, x4, -> 48)
///   D12: ( 96 ->  48 ->  48, x2, -> 48)
template <typename T>
class DecoderBlock : public Module<T> {
public:
    DecoderBlock(std::string name, int64_t in_ch, int64_t mid_ch, int64_t out_ch,
                 int64_t up_factor)
        : name_(std::move(name)), in_ch_(in_ch), factor_(up_factor) {
        ds_a = this->template register_module<DSConv<T>>("ds_a", in_ch, mid_ch);
        ds_b = this->template register_module<DSConv<T>>("ds_b", mid_ch, mid_ch);
        ds_c = this->template register_module<DSConv<T>>("ds_c", mid_ch, out_ch);
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        SEANET_CHECK(x.ndim() == 4 && x.dim(1) == in_ch_, name_, ": expected (N,", in_ch_,
                     ",H,W) input, got ", shape_str(x.shape()));
        return ds_c->forward(upsample(ds_b->forward(ds_a->forward(x)), factor_));
    }

    const std::string& name() const { return name_; }
    int64_t up_factor() const { return factor_; }

    std::shared_ptr<DSConv<T>> ds_a, ds_b, ds_c;

private:
    std::string name_;
    int64_t in_ch_, factor_;
};

/// The three supervised maps, shallowest (full-resolution) first. Logits are
/// retained because the losses are evaluated in logit space.
template <typename T>
struct SaliencyOutputs {
    SalOut<T> s1; // from D12 output, input resolution
    SalOut<T> s2; // from D34 output, half resolution
    SalOut<T> s3; // from D5 output, 1/8 resolution
};

template <typename T>
struct DecodeTrace {
    Tensor<T> d5, d34, d12;
    SaliencyOutputs<T> maps;
};

/// Decoder: walks from the deepest level upward, concatenating the matching
/// module feature (decoder feature first) before each of the two lower
/// blocks, with a saliency head on every block output.
///
/// `dsmm_ch`/`esam_ch` are the channel counts of the fused module features;
/// pass 0 when the corresponding module is ablated away (the concatenation
/// is skipped and the block input shrinks accordingly).
template <typename T>
class Decoder : public Module<T> {
public:
    Decoder(int64_t c5 = 320, int64_t hi = 192, int64_t lo = 48, int64_t dsmm_ch = 192,
            int64_t esam_ch = 48, double dropout_p = 0.1)
        : dsmm_ch_(dsmm_ch), esam_ch_(esam_ch) {
        d5 = this->template register_module<DecoderBlock<T>>("d5", "D5", c5, c5, hi, 4);
        d34 = this->template register_module<DecoderBlock<T>>("d34", "D34", hi + dsmm_ch, hi,
                                                              lo, 4);
        d12 = this->template register_module<DecoderBlock<T>>("d12", "D12", lo + esam_ch, lo,
                                                              lo, 2);
        head3 = this->template register_module<SalHead<T>>("head3", hi, dropout_p);
        head2 = this->template register_module<SalHead<T>>("head2", lo, dropout_p);
        head1 = this->template register_module<SalHead<T>>("head1", lo, dropout_p);
    }

    /// `f_dsmm`/`f_esam` must be undefined exactly when the decoder was
    /// built with the corresponding channel count 0.
    DecodeTrace<T> decode_detail(const Tensor<T>& f5, const Tensor<T>& f_dsmm,
                                 const Tensor<T>& f_esam, std::mt19937_64& rng) const {
        SEANET_CHECK(f_dsmm.defined() == (dsmm_ch_ > 0),
                     "decode: matching-module feature presence does not match the decoder plan");
        SEANET_CHECK(f_esam.defined() == (esam_ch_ > 0),
                     "decode: edge-module feature presence does not match the decoder plan");
        DecodeTrace<T> tr;
        tr.d5 = d5->forward(f5);
        tr.maps.s3 = head3->forward(tr.d5, rng);
        Tensor<T> in34 = f_dsmm.defined()
                             ? concat_channels(std::vector<Tensor<T>>{tr.d5, f_dsmm})
                             : tr.d5;
        tr.d34 = d34->forward(in34);
        tr.maps.s2 = head2->forward(tr.d34, rng);
        Tensor<T> in12 = f_esam.defined()
                             ? concat_channels(std::vector<Tensor<T>>{tr.d34, f_esam})
                             : tr.d34;
        tr.d12 = d12->forward(in12);
        tr.maps.s1 = head1->forward(tr.d12, rng);
        return tr;
    }

    SaliencyOutputs<T> decode(const Tensor<T>& f5, const Tensor<T>& f_dsmm,
                              const Tensor<T>& f_esam, std::mt19937_64& rng) const {
        return decode_detail(f5, f_dsmm, f_esam, rng).maps;
    }

    std::shared_ptr<DecoderBlock<T>> d5, d34, d12;
    std::shared_ptr<SalHead<T>> head3, head2, head1;

private:
    int64_t dsmm_ch_, esam_ch_;
};

} // namespace seanet
