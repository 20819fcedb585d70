#pragma once

#include "seanet/backbone.hpp"
#include "seanet/decoder.hpp"
#include "seanet/dynamic_matching.hpp"
#include "seanet/edge_alignment.hpp"

namespace seanet {

/// Structural switches of the network. Each `no_*` flag removes one piece;
/// flags targeting the inside of an ablated module are rejected as
/// inconsistent (there is nothing left for them to modify).
struct ModelOptions {
    double width_mult = 1.0;
    bool no_dsmm = false;      // drop the matching module entirely
    bool no_esam = false;      // drop the edge module entirely
    bool no_sm = false;        // inside DSMM: skip semantic matching
    bool no_dilation = false;  // inside DSMM: dilation rates {1,1,1}
    bool no_ccorr1 = false;    // inside DSMM: concatenate instead of correlate
    bool no_ccorr2 = false;    // inside ESAM: concatenate instead of correlate
    bool no_eeu = false;       // inside ESAM: skip the edge gates
    bool no_alignment = false; // drop the self-alignment loss term (and its PReLU)
    int64_t pool_kernel = 3;   // edge-extraction window
    double dropout_p = 0.1;    // saliency-head dropout probability

    void validate() const {
        SEANET_CHECK(dropout_p >= 0.0 && dropout_p < 1.0,
                     "dropout probability must lie in [0, 1), got ", dropout_p);
        SEANET_CHECK(pool_kernel >= 1 && pool_kernel % 2 == 1,
                     "edge pool_kernel must be odd and positive, got ", pool_kernel);
        SEANET_CHECK(!(no_dsmm && no_sm),
                     "inconsistent ablation: no_sm modifies the DSMM, but no_dsmm removes it");
        SEANET_CHECK(!(no_dsmm && no_dilation),
                     "inconsistent ablation: no_dilation modifies the DSMM, but no_dsmm removes it");
        SEANET_CHECK(!(no_dsmm && no_ccorr1),
                     "inconsistent ablation: no_ccorr1 modifies the DSMM, but no_dsmm removes it");
        SEANET_CHECK(!(no_esam && no_eeu),
                     "inconsistent ablation: no_eeu modifies the ESAM, but no_esam removes it");
        SEANET_CHECK(!(no_esam && no_ccorr2),
                     "inconsistent ablation: no_ccorr2 modifies the ESAM, but no_esam removes it");
    }
};

/// Everything one forward pass produces: the three supervised saliency maps
/// and, when the edge module exists, the two raw edge maps the
/// self-alignment loss consumes.
template <typename T>
struct SeaNetOutputs {
    SaliencyOutputs<T> maps;
    Tensor<T> edge1, edge2; // undefined when the edge module is ablated
};

/// The full network: truncated MobileNet-V2 encoder, dynamic semantic
/// matching over levels 3-5, edge self-alignment over levels 1-2, and the
/// three-block decoder with deep supervision.
template <typename T>
class SeaNet : public Module<T> {
public:
    explicit SeaNet(ModelOptions opt = {}) : opt_(opt) {
        opt_.validate();
        encoder = this->template register_module<MobileNetV2Encoder<T>>("encoder",
                                                                        opt_.width_mult);
        const auto& ch = encoder->level_channels(); // {c1..c5}
        const int64_t hi = 2 * ch[3], lo = 2 * ch[1];
        if (!opt_.no_dsmm) {
            dsmm = this->template register_module<DSMM<T>>("dsmm", ch[2], ch[3], ch[4],
                                                           !opt_.no_sm, !opt_.no_dilation,
                                                           !opt_.no_ccorr1);
        }
        if (!opt_.no_esam) {
            esam = this->template register_module<ESAM<T>>("esam", ch[0], ch[1], !opt_.no_eeu,
                                                           !opt_.no_ccorr2, opt_.pool_kernel);
        }
        decoder = this->template register_module<Decoder<T>>(
            "decoder", ch[4], hi, lo, opt_.no_dsmm ? 0 : hi, opt_.no_esam ? 0 : lo,
            opt_.dropout_p);
        if (!opt_.no_alignment) {
            edge_prelu = this->template register_module<PReLUShared<T>>("edge_prelu");
        }
    }

    /// Input must be (N,3,288,288); `rng` drives dropout in training mode.
    SeaNetOutputs<T> forward(const Tensor<T>& x, std::mt19937_64& rng) const {
        auto lv = encoder->encode(x);
        SeaNetOutputs<T> out;
        Tensor<T> f_dsmm, f_esam;
        if (dsmm) f_dsmm = dsmm->forward(lv[2], lv[3], lv[4]);
        if (esam) {
            auto tr = esam->forward_detail(lv[0], lv[1]);
            f_esam = tr.out;
            out.edge1 = tr.edge1;
            out.edge2 = tr.edge2;
        }
        out.maps = decoder->decode(lv[4], f_dsmm, f_esam, rng);
        return out;
    }

    const ModelOptions& options() const { return opt_; }

    std::shared_ptr<MobileNetV2Encoder<T>> encoder;
    std::shared_ptr<DSMM<T>> dsmm;         // null under no_dsmm
    std::shared_ptr<ESAM<T>> esam;         // null under no_esam
    std::shared_ptr<Decoder<T>> decoder;
    std::shared_ptr<PReLUShared<T>> edge_prelu; // null under no_alignment

private:
    ModelOptions opt_;
};

} // namespace seanet
