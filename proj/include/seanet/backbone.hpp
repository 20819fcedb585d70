#pragma once

#include "seanet/nn.hpp"

#include <array>
#include <memory>
#include <vector>

namespace seanet {

/// Round a scaled channel count to a multiple of `divisor`, never dropping
/// below 90% of the requested value (standard MobileNet rounding).
inline int64_t make_divisible(double v, int64_t divisor = 8) {
    auto new_v = std::max<int64_t>(divisor,
                                   static_cast<int64_t>(v + divisor / 2.0) / divisor * divisor);
    if (static_cast<double>(new_v) < 0.9 * v) new_v += divisor;
    return new_v;
}

/// Truncated MobileNet-V2 encoder: stem convolution plus the first seventeen
/// inverted-residual bottlenecks. Feature maps are tapped after bottlenecks
/// {1, 3, 6, 13, 17}, giving five levels with channels {16, 24, 32, 96, 320}
/// at width 1.0 and strides {2, 4, 8, 16, 32}.
///
/// The stock classifier stage (final 1x1 conv + pooling + fc) is not part of
/// the forward path. The 1x1 tail convolution is still registered as
/// parameters so checkpoints converted from stock MobileNet-V2 load without
/// remapping; nothing in `forward`/`encode` can reach it.
template <typename T>
class MobileNetV2Encoder : public Module<T> {
public:
    explicit MobileNetV2Encoder(double width_mult = 1.0) {
        SEANET_CHECK(width_mult > 0, "MobileNetV2Encoder: width_mult must be positive, got ",
                     width_mult);
        // (expand_ratio, channels, repeats, first_stride) per stage
        struct Stage {
            int64_t t, c, n, s;
        };
        const std::array<Stage, 7> stages{{{1, 16, 1, 1},
                                           {6, 24, 2, 2},
                                           {6, 32, 3, 2},
                                           {6, 64, 4, 2},
                                           {6, 96, 3, 1},
                                           {6, 160, 3, 2},
                                           {6, 320, 1, 1}}};
        int64_t ch = make_divisible(32 * width_mult);
        stem = this->template register_module<ConvBNAct<T>>("stem", 3, ch, 3, 2, 1, 1,
                                                            Act::ReLU6);
        int64_t idx = 0;
        for (const auto& st : stages) {
            int64_t out_ch = make_divisible(st.c * width_mult);
            for (int64_t i = 0; i < st.n; ++i) {
                ++idx;
                int64_t stride = i == 0 ? st.s : 1;
                blocks.push_back(this->template register_module<InvertedResidual<T>>(
                    "block" + std::to_string(idx), ch, out_ch, stride, st.t));
                ch = out_ch;
            }
        }
        int64_t last = make_divisible(1280 * std::max(1.0, width_mult));
        tail = this->template register_module<ConvBNAct<T>>("tail", ch, last, 1, 1, 0, 1,
                                                            Act::ReLU6);
        int64_t lvl = 0;
        for (int64_t b : kSplitAfter) level_channels_[lvl++] = block_out_channels(b);
    }

    /// Size-generic forward pass; returns the five tapped feature maps.
    std::array<Tensor<T>, 5> forward(const Tensor<T>& x) const {
        SEANET_CHECK(x.ndim() == 4 && x.dim(1) == 3,
                     "encoder: expected (N,3,H,W) input, got ", shape_str(x.shape()));
        std::array<Tensor<T>, 5> levels;
        Tensor<T> y = stem->forward(x);
        size_t lvl = 0;
        for (size_t i = 0; i < blocks.size(); ++i) {
            y = blocks[i]->forward(y);
            if (lvl < kSplitAfter.size() && static_cast<int64_t>(i) + 1 == kSplitAfter[lvl])
                levels[lvl++] = y;
        }
        return levels;
    }

    /// Strict entry point for the network: input must be (N,3,288,288).
    std::array<Tensor<T>, 5> encode(const Tensor<T>& x) const {
        SEANET_CHECK(x.ndim() == 4 && x.dim(1) == 3 && x.dim(2) == 288 && x.dim(3) == 288,
                     "encode: expected (N,3,288,288) input, got ", shape_str(x.shape()));
        return forward(x);
    }

    const std::array<int64_t, 5>& level_channels() const { return level_channels_; }

    /// Parameters reachable from `encode` (everything except the dormant tail).
    int64_t active_parameter_count() const {
        return this->parameter_count() - tail->parameter_count();
    }

    std::shared_ptr<ConvBNAct<T>> stem;
    std::vector<std::shared_ptr<InvertedResidual<T>>> blocks; // block1..block17
    std::shared_ptr<ConvBNAct<T>> tail;                       // never in the forward path

    static constexpr std::array<int64_t, 5> kSplitAfter{1, 3, 6, 13, 17};

private:
    int64_t block_out_channels(int64_t ordinal) const {
        // out channels of a bottleneck = its projection stage's BN width
        return blocks[static_cast<size_t>(ordinal - 1)]->project->bn->weight.numel();
    }

    std::array<int64_t, 5> level_channels_{};
};

template <typename T>
std::shared_ptr<MobileNetV2Encoder<T>> build_backbone(double width_mult = 1.0) {
    return std::make_shared<MobileNetV2Encoder<T>>(width_mult);
}

} // namespace seanet
