#pragma once

#include "seanet/ops.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace seanet {

/// Base class for layers: owns named parameters, buffers and child modules,
/// provides the train/eval switch and the recursive weight-init walk.
/// Registered tensors are shared handles, so optimizers and checkpoints see
/// the same storage the forward pass reads.
template <typename T>
class Module {
public:
    virtual ~Module() = default;

    bool is_training() const { return training_; }
    void train(bool on = true) {
        training_ = on;
        for (auto& c : children_) c.second->train(on);
    }
    void eval() { train(false); }

    /// Parameters always require gradients. The returned copy aliases the
    /// stored node, so members assigned from it stay in sync.
    Tensor<T> register_parameter(const std::string& name, Tensor<T> t) {
        SEANET_CHECK(t.defined(), "register_parameter(", name, "): undefined tensor");
        t.set_requires_grad(true);
        params_.emplace_back(name, t);
        return t;
    }

    /// Buffers are persistent state outside the tape (e.g. running stats).
    Tensor<T> register_buffer(const std::string& name, Tensor<T> t) {
        SEANET_CHECK(t.defined(), "register_buffer(", name, "): undefined tensor");
        buffers_.emplace_back(name, t);
        return t;
    }

    template <typename M, typename... Args>
    std::shared_ptr<M> register_module(const std::string& name, Args&&... args) {
        auto m = std::make_shared<M>(std::forward<Args>(args)...);
        children_.emplace_back(name, m);
        return m;
    }

    void collect_parameters(std::vector<std::pair<std::string, Tensor<T>>>& out,
                            const std::string& prefix = "") const {
        for (const auto& p : params_) out.emplace_back(prefix + p.first, p.second);
        for (const auto& c : children_) c.second->collect_parameters(out, prefix + c.first + ".");
    }
    std::vector<std::pair<std::string, Tensor<T>>> named_parameters() const {
        std::vector<std::pair<std::string, Tensor<T>>> out;
        collect_parameters(out);
        return out;
    }

    void collect_buffers(std::vector<std::pair<std::string, Tensor<T>>>& out,
                         const std::string& prefix = "") const {
        for (const auto& b : buffers_) out.emplace_back(prefix + b.first, b.second);
        for (const auto& c : children_) c.second->collect_buffers(out, prefix + c.first + ".");
    }
    std::vector<std::pair<std::string, Tensor<T>>> named_buffers() const {
        std::vector<std::pair<std::string, Tensor<T>>> out;
        collect_buffers(out);
        return out;
    }

    std::vector<Tensor<T>> parameters() const {
        std::vector<Tensor<T>> out;
        for (const auto& [name, t] : named_parameters()) out.push_back(t);
        return out;
    }

    int64_t parameter_count() const {
        int64_t n = 0;
        for (const auto& [name, t] : named_parameters()) n += t.numel();
        return n;
    }

    void zero_grad() {
        for (auto& t : parameters()) t.zero_grad();
    }

    /// Deterministic initialization: pre-order walk, a module's own
    /// parameters first, then children in registration order.
    void init_weights(std::mt19937_64& rng) {
        reset_parameters(rng);
        for (auto& c : children_) c.second->init_weights(rng);
    }

protected:
    /// Leaf-layer init hook; composite modules keep the default no-op.
    virtual void reset_parameters(std::mt19937_64&) {}

    bool training_ = true;
    std::vector<std::pair<std::string, Tensor<T>>> params_;
    std::vector<std::pair<std::string, Tensor<T>>> buffers_;
    std::vector<std::pair<std::string, std::shared_ptr<Module<T>>>> children_;
};

/// 2-D convolution layer. Weights use Kaiming-normal fan-in init, biases
/// start at zero. `groups` must be 1 (dense) or equal to the channel count
/// (depthwise, multiplier 1) — the only two forms the network uses.
template <typename T>
class Conv2d : public Module<T> {
public:
    Conv2d(int64_t in_ch, int64_t out_ch, int64_t kernel, int64_t stride = 1, int64_t pad = 0,
           int64_t dil = 1, int64_t groups = 1, bool with_bias = true)
        : in_ch_(in_ch), out_ch_(out_ch), stride_(stride), pad_(pad), dil_(dil), groups_(groups) {
        SEANET_CHECK(groups == 1 || (groups == in_ch && out_ch == in_ch),
                     "Conv2d: groups must be 1 or match in/out channels (depthwise); got groups=",
                     groups, ", in=", in_ch, ", out=", out_ch);
        Shape ws = groups == 1 ? Shape{out_ch, in_ch, kernel, kernel}
                               : Shape{in_ch, 1, kernel, kernel};
        weight = this->register_parameter("weight", Tensor<T>(std::move(ws)));
        if (with_bias) bias = this->register_parameter("bias", Tensor<T>(Shape{out_ch}));
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        return groups_ == 1 ? conv2d(x, weight, bias, stride_, pad_, dil_)
                            : depthwise_conv2d(x, weight, bias, stride_, pad_, dil_);
    }

    int64_t in_channels() const { return in_ch_; }
    int64_t out_channels() const { return out_ch_; }
    int64_t kernel() const { return weight.shape()[2]; }
    int64_t stride() const { return stride_; }
    int64_t padding() const { return pad_; }
    int64_t dilation() const { return dil_; }
    int64_t groups() const { return groups_; }

    Tensor<T> weight;
    Tensor<T> bias; // undefined when constructed without bias

protected:
    void reset_parameters(std::mt19937_64& rng) override {
        const Shape& ws = weight.shape();
        double fan_in = static_cast<double>(ws[1] * ws[2] * ws[3]);
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
        for (auto& v : weight.vec()) v = static_cast<T>(dist(rng));
        if (bias.defined()) std::fill(bias.vec().begin(), bias.vec().end(), T(0));
    }

private:
    int64_t in_ch_, out_ch_, stride_, pad_, dil_, groups_;
};

/// Batch normalization over NCHW channels (eps 1e-5, momentum 0.1).
template <typename T>
class BatchNorm2d : public Module<T> {
public:
    explicit BatchNorm2d(int64_t channels) {
        weight = this->register_parameter("weight", Tensor<T>(Shape{channels}, T(1)));
        bias = this->register_parameter("bias", Tensor<T>(Shape{channels}, T(0)));
        running_mean = this->register_buffer("running_mean", Tensor<T>(Shape{channels}, T(0)));
        running_var = this->register_buffer("running_var", Tensor<T>(Shape{channels}, T(1)));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        return batch_norm2d(x, weight, bias, running_mean, running_var, this->is_training());
    }

    Tensor<T> weight, bias;
    Tensor<T> running_mean, running_var;

protected:
    void reset_parameters(std::mt19937_64&) override {
        std::fill(weight.vec().begin(), weight.vec().end(), T(1));
        std::fill(bias.vec().begin(), bias.vec().end(), T(0));
        std::fill(running_mean.vec().begin(), running_mean.vec().end(), T(0));
        std::fill(running_var.vec().begin(), running_var.vec().end(), T(1));
    }
};

enum class Act { None, ReLU, ReLU6 };

/// Conv (no bias) + BatchNorm + optional activation.
template <typename T>
class ConvBNAct : public Module<T> {
public:
    ConvBNAct(int64_t in_ch, int64_t out_ch, int64_t kernel, int64_t stride, int64_t pad,
              int64_t groups, Act act)
        : act_(act) {
        conv = this->template register_module<Conv2d<T>>("conv", in_ch, out_ch, kernel, stride,
                                                         pad, /*dil=*/1, groups,
                                                         /*with_bias=*/false);
        bn = this->template register_module<BatchNorm2d<T>>("bn", out_ch);
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        Tensor<T> y = bn->forward(conv->forward(x));
        switch (act_) {
            case Act::ReLU: return relu(y);
            case Act::ReLU6: return relu6(y);
            case Act::None: return y;
        }
        fail("ConvBNAct: unreachable activation");
    }

    Act activation() const { return act_; }

    std::shared_ptr<Conv2d<T>> conv;
    std::shared_ptr<BatchNorm2d<T>> bn;

private:
    Act act_;
};

/// Depthwise-separable convolution: 3x3 depthwise + 1x1 pointwise, each
/// followed by BatchNorm and ReLU.
template <typename T>
class DSConv : public Module<T> {
public:
    DSConv(int64_t in_ch, int64_t out_ch, int64_t stride = 1) {
        dw = this->template register_module<ConvBNAct<T>>("dw", in_ch, in_ch, 3, stride, 1,
                                                          in_ch, Act::ReLU);
        pw = this->template register_module<ConvBNAct<T>>("pw", in_ch, out_ch, 1, 1, 0, 1,
                                                          Act::ReLU);
    }

    Tensor<T> forward(const Tensor<T>& x) const { return pw->forward(dw->forward(x)); }

    std::shared_ptr<ConvBNAct<T>> dw, pw;
};

/// MobileNetV2 inverted-residual bottleneck (ReLU6): optional 1x1 expansion,
/// 3x3 depthwise, linear 1x1 projection; skip connection when the block
/// keeps resolution and channel count.
template <typename T>
class InvertedResidual : public Module<T> {
public:
    InvertedResidual(int64_t in_ch, int64_t out_ch, int64_t stride, int64_t expand_ratio)
        : use_res_(stride == 1 && in_ch == out_ch) {
        SEANET_CHECK(stride == 1 || stride == 2,
                     "InvertedResidual: stride must be 1 or 2, got ", stride);
        int64_t hidden = in_ch * expand_ratio;
        if (expand_ratio != 1) {
            expand = this->template register_module<ConvBNAct<T>>("expand", in_ch, hidden, 1, 1,
                                                                  0, 1, Act::ReLU6);
        }
        dw = this->template register_module<ConvBNAct<T>>("dw", hidden, hidden, 3, stride, 1,
                                                          hidden, Act::ReLU6);
        project = this->template register_module<ConvBNAct<T>>("project", hidden, out_ch, 1, 1,
                                                               0, 1, Act::None);
    }

    Tensor<T> forward(const Tensor<T>& x) const {
        Tensor<T> y = expand ? expand->forward(x) : x;
        y = project->forward(dw->forward(y));
        return use_res_ ? add(x, y) : y;
    }

    bool has_residual() const { return use_res_; }

    std::shared_ptr<ConvBNAct<T>> expand; // null when expand_ratio == 1
    std::shared_ptr<ConvBNAct<T>> dw, project;

private:
    bool use_res_;
};

/// PReLU with a single slope shared across all elements (init 0.25).
template <typename T>
class PReLUShared : public Module<T> {
public:
    PReLUShared() { weight = this->register_parameter("weight", Tensor<T>(Shape{1}, T(0.25))); }

    Tensor<T> forward(const Tensor<T>& x) const { return prelu_shared(x, weight); }

    Tensor<T> weight;

protected:
    void reset_parameters(std::mt19937_64&) override { weight.vec()[0] = T(0.25); }
};

/// Inverted dropout; identity in evaluation mode.
template <typename T>
class Dropout : public Module<T> {
public:
    explicit Dropout(double p) : p_(p) {}

    Tensor<T> forward(const Tensor<T>& x, std::mt19937_64& rng) const {
        return dropout(x, p_, this->is_training(), rng);
    }

    double p() const { return p_; }

private:
    double p_;
};

/// Saliency prediction head: Dropout(0.1) + 1x1 conv to one channel.
/// Keeps the raw logits (losses are computed in logit space) alongside the
/// sigmoid probability map.
template <typename T>
struct SalOut {
    Tensor<T> logits; // (N,1,H,W)
    Tensor<T> prob;   // sigmoid(logits)
};

template <typename T>
class SalHead : public Module<T> {
public:
    explicit SalHead(int64_t in_ch, double dropout_p = 0.1) {
        drop = this->template register_module<Dropout<T>>("drop", dropout_p);
        conv = this->template register_module<Conv2d<T>>("conv", in_ch, 1, 1);
    }

    SalOut<T> forward(const Tensor<T>& x, std::mt19937_64& rng) const {
        Tensor<T> logits = conv->forward(drop->forward(x, rng));
        return {logits, sigmoid(logits)};
    }

    std::shared_ptr<Dropout<T>> drop;
    std::shared_ptr<Conv2d<T>> conv;
};

} // namespace seanet
