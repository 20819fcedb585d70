#pragma once

#include "seanet/model.hpp"

#include <string>
#include <vector>

namespace seanet {

/// One named row of the complexity report. Parameter counts are static;
/// FLOPs are analytic multiply-accumulate counts for a single forward pass
/// at the declared input size (training-only pieces report zero).
struct ComplexityEntry {
    std::string name;
    int64_t params = 0;
    int64_t flops = 0;
};

/// FLOPs counting convention, embedded in every report.
inline constexpr const char* kFlopsConvention =
    "1 MAC = 1 FLOP; elementwise/normalization/activation 1 per output element; "
    "pooling window size per output; bilinear resize 4 per output; "
    "softmax 3 per element; matmul M*K*N";

struct ComplexityReport {
    int64_t input_size = 0;
    std::string convention;
    std::vector<ComplexityEntry> entries;
    int64_t total_params = 0;
    int64_t total_flops = 0;

    const ComplexityEntry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
};

/// Per-layer MAC counters. Each helper mirrors one forward-path operation;
/// helpers that change resolution advance the grid they are given.
namespace flops {

struct Grid {
    int64_t h = 0, w = 0;
    int64_t numel(int64_t ch) const { return ch * h * w; }
};

inline int64_t conv_extent(int64_t in, int64_t k, int64_t stride, int64_t pad, int64_t dil) {
    return (in + 2 * pad - dil * (k - 1) - 1) / stride + 1;
}

template <typename T>
int64_t conv(const Conv2d<T>& c, Grid& g) {
    g.h = conv_extent(g.h, c.kernel(), c.stride(), c.padding(), c.dilation());
    g.w = conv_extent(g.w, c.kernel(), c.stride(), c.padding(), c.dilation());
    int64_t macs = g.h * g.w * c.weight.numel();
    if (c.bias.defined()) macs += g.numel(c.out_channels());
    return macs;
}

template <typename T>
int64_t conv_bn_act(const ConvBNAct<T>& m, Grid& g) {
    int64_t total = conv(*m.conv, g);
    total += g.numel(m.conv->out_channels()); // batch-norm scale/shift
    if (m.activation() != Act::None) total += g.numel(m.conv->out_channels());
    return total;
}

template <typename T>
int64_t dsconv(const DSConv<T>& m, Grid& g) {
    return conv_bn_act(*m.dw, g) + conv_bn_act(*m.pw, g);
}

inline int64_t upsample(int64_t ch, Grid& g, int64_t factor) {
    g.h *= factor;
    g.w *= factor;
    return 4 * g.numel(ch); // four-tap bilinear blend per output
}

inline int64_t local_avg_pool(int64_t ch, const Grid& g, int64_t k) {
    return k * k * g.numel(ch); // size-preserving window
}

inline int64_t adaptive_avg_pool(int64_t ch, const Grid& g, int64_t out_h, int64_t out_w) {
    // floor/ceil windows may overlap, so sum the actual window extents
    auto span_sum = [](int64_t in, int64_t out) {
        int64_t total = 0;
        for (int64_t i = 0; i < out; ++i)
            total += (i + 1) * in / out + ((i + 1) * in % out ? 1 : 0) - i * in / out;
        return total;
    };
    return ch * span_sum(g.h, out_h) * span_sum(g.w, out_w);
}

inline int64_t softmax(int64_t elements) { return 3 * elements; }

inline int64_t matmul(int64_t m, int64_t k, int64_t n) { return m * k * n; }

/// Dynamic depthwise pass of one dilation rate; parameter-free but counted
/// like a depthwise convolution of its shape (size-preserving).
inline int64_t ddconv(int64_t ch, const Grid& g, int64_t k) { return k * k * g.numel(ch); }

template <typename T>
int64_t ccorr(const CCorr<T>& m, const Grid& g) {
    const int64_t c = m.channels(), hw = g.h * g.w;
    int64_t total = matmul(hw, c, c);     // f̂₁ ⊛ Wm
    total += matmul(c, hw, c);            // affinity
    total += 2 * softmax(c * c);          // row- and column-normalization
    total += 2 * matmul(c, c, hw);        // both attention products
    total += 2 * g.numel(c);              // residual adds
    Grid g1 = g, g2 = g;
    total += dsconv(*m.ds1, g1) + dsconv(*m.ds2, g2);
    return total;
}

template <typename T>
int64_t eeu(const EEU<T>& m, const Grid& g) {
    const int64_t ch = m.conv->in_channels();
    int64_t total = local_avg_pool(ch, g, m.pool_kernel()) + g.numel(ch); // edge extraction
    Grid gc = g;
    total += conv(*m.conv, gc);
    total += 3 * g.numel(ch); // sigmoid gate, multiply, residual add
    return total;
}

template <typename T>
int64_t inverted_residual(const InvertedResidual<T>& m, Grid& g) {
    int64_t total = 0;
    if (m.expand) total += conv_bn_act(*m.expand, g);
    total += conv_bn_act(*m.dw, g) + conv_bn_act(*m.project, g);
    if (m.has_residual()) total += g.numel(m.project->conv->out_channels());
    return total;
}

template <typename T>
int64_t encoder(const MobileNetV2Encoder<T>& m, Grid& g) {
    int64_t total = conv_bn_act(*m.stem, g);
    for (const auto& block : m.blocks) total += inverted_residual(*block, g);
    return total; // the dormant tail never runs
}

/// DSMM at the level-3 grid (level 4 is half, level 5 a quarter of it).
template <typename T>
int64_t dsmm(const DSMM<T>& m, const Grid& g3) {
    const Grid g4{g3.h / 2, g3.w / 2}, g5{g3.h / 4, g3.w / 4};
    int64_t total = 0;
    int64_t c3 = 0, c4 = 0;
    if (m.skc) {
        c3 = m.skc->ds3->pw->conv->out_channels();
        c4 = m.skc->ds4->pw->conv->out_channels();
        Grid ga = g5, gb = g5;
        total += dsconv(*m.skc->ds3, ga) + adaptive_avg_pool(c3, ga, 5, 5);
        total += dsconv(*m.skc->ds4, gb) + adaptive_avg_pool(c4, gb, 5, 5);
        const auto rates = static_cast<int64_t>(m.dilations().size());
        total += rates * ddconv(c3, g3, 5) + (rates - 1) * g3.numel(c3);
        total += rates * ddconv(c4, g4, 5) + (rates - 1) * g4.numel(c4);
        Grid gp3 = g3, gp4 = g4;
        total += conv_bn_act(*m.pconv3, gp3) + conv_bn_act(*m.pconv4, gp4);
    }
    Grid galign = g3;
    total += dsconv(*m.align, galign);
    c4 = m.align->pw->conv->out_channels();
    Grid gup = g4;
    total += upsample(c4, gup, 2);
    if (m.ccorr) total += ccorr(*m.ccorr, g3);
    return total;
}

/// ESAM at the level-1 grid (level 2 is half of it).
template <typename T>
int64_t esam(const ESAM<T>& m, const Grid& g1) {
    const Grid g2{g1.h / 2, g1.w / 2};
    const int64_t c2 = m.align1->pw->conv->out_channels();
    Grid ga = g1, gb = g2;
    int64_t total = dsconv(*m.align1, ga) + dsconv(*m.align2, gb) + upsample(c2, gb, 2);
    if (m.eeu1) {
        total += eeu(*m.eeu1, g1) + eeu(*m.eeu2, g1);
    } else {
        // edges are still extracted for the alignment loss
        total += 2 * (local_avg_pool(c2, g1, m.pool_kernel()) + g1.numel(c2));
    }
    if (m.ccorr) total += ccorr(*m.ccorr, g1);
    return total;
}

template <typename T>
int64_t decoder_block(const DecoderBlock<T>& m, Grid& g) {
    int64_t total = dsconv(*m.ds_a, g) + dsconv(*m.ds_b, g);
    total += upsample(m.ds_b->pw->conv->out_channels(), g, m.up_factor());
    total += dsconv(*m.ds_c, g);
    return total;
}

/// Inference head: dropout is identity outside training, so only the 1x1
/// convolution and the sigmoid are counted.
template <typename T>
int64_t sal_head(const SalHead<T>& m, const Grid& g) {
    Grid gc = g;
    return conv(*m.conv, gc) + gc.numel(1);
}

/// Full decode pass given the level-5 grid; skip features enter at 4x and
/// 16x that resolution and concatenation itself is free.
template <typename T>
int64_t decoder(const Decoder<T>& m, const Grid& g5) {
    Grid g = g5;
    int64_t total = decoder_block(*m.d5, g) + sal_head(*m.head3, g);
    total += decoder_block(*m.d34, g) + sal_head(*m.head2, g);
    total += decoder_block(*m.d12, g) + sal_head(*m.head1, g);
    return total;
}

} // namespace flops

/// Static parameter/FLOPs analysis of a constructed model. Parameters are
/// counted per top-level module with the dormant encoder tail broken out as
/// its own row (it contributes no FLOPs); totals are the row sums.
template <typename T>
ComplexityReport analyze_complexity(const SeaNet<T>& model, int64_t input_size = 288) {
    SEANET_CHECK(input_size > 0 && input_size % 32 == 0,
                 "analyze_complexity: input size must be a positive multiple of 32, got ",
                 input_size);
    if (model.dsmm && model.dsmm->skc)
        SEANET_CHECK(input_size / 32 >= 5,
                     "analyze_complexity: input size ", input_size,
                     " leaves the deepest level smaller than the 5x5 semantic kernels");

    ComplexityReport rep;
    rep.input_size = input_size;
    rep.convention = kFlopsConvention;

    flops::Grid g{input_size, input_size};
    const int64_t tail_params = model.encoder->tail->parameter_count();
    rep.entries.push_back({"encoder", model.encoder->parameter_count() - tail_params,
                           flops::encoder(*model.encoder, g)});
    rep.entries.push_back({"encoder_unused_tail", tail_params, 0});

    const flops::Grid g1{input_size / 2, input_size / 2};
    const flops::Grid g3{input_size / 8, input_size / 8};
    const flops::Grid g5{input_size / 32, input_size / 32};
    if (model.dsmm)
        rep.entries.push_back(
            {"dsmm", model.dsmm->parameter_count(), flops::dsmm(*model.dsmm, g3)});
    if (model.esam)
        rep.entries.push_back(
            {"esam", model.esam->parameter_count(), flops::esam(*model.esam, g1)});
    rep.entries.push_back(
        {"decoder", model.decoder->parameter_count(), flops::decoder(*model.decoder, g5)});
    if (model.edge_prelu)
        rep.entries.push_back({"edge_prelu", model.edge_prelu->parameter_count(), 0});

    for (const auto& e : rep.entries) {
        rep.total_params += e.params;
        rep.total_flops += e.flops;
    }
    return rep;
}

} // namespace seanet
