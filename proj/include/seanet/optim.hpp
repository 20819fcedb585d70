#pragma once

#include "seanet/tensor.hpp"

#include <cmath>
#include <vector>

namespace seanet {

/// Adam with the standard bias-corrected moment estimates. The learning rate
/// is mutable so a step schedule can adjust it between epochs; moment state
/// is keyed by parameter order and survives rate changes.
template <typename T>
class Adam {
public:
    explicit Adam(std::vector<Tensor<T>> params, T lr, T beta1 = T(0.9), T beta2 = T(0.999),
                  T eps = T(1e-8))
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        SEANET_CHECK(lr > T(0), "Adam: learning rate must be positive, got ", lr);
        SEANET_CHECK(beta1 >= T(0) && beta1 < T(1) && beta2 >= T(0) && beta2 < T(1),
                     "Adam: betas must lie in [0, 1)");
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(static_cast<size_t>(params_[i].numel()), T(0));
            v_[i].assign(static_cast<size_t>(params_[i].numel()), T(0));
        }
    }

    T lr() const { return lr_; }
    void set_lr(T lr) {
        SEANET_CHECK(lr > T(0), "Adam: learning rate must be positive, got ", lr);
        lr_ = lr;
    }
    int64_t steps() const { return t_; }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    /// One update from the currently accumulated gradients. Parameters whose
    /// gradient was never touched this step are left unchanged.
    void step() {
        ++t_;
        const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(t_));
        const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(t_));
        for (size_t i = 0; i < params_.size(); ++i) {
            Tensor<T>& p = params_[i];
            if (!p.has_grad()) continue;
            const std::vector<T>& g = p.grad();
            for (size_t k = 0; k < g.size(); ++k) {
                m_[i][k] = beta1_ * m_[i][k] + (T(1) - beta1_) * g[k];
                v_[i][k] = beta2_ * v_[i][k] + (T(1) - beta2_) * g[k] * g[k];
                const T mhat = m_[i][k] / bc1;
                const T vhat = v_[i][k] / bc2;
                p[static_cast<int64_t>(k)] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

private:
    std::vector<Tensor<T>> params_;
    std::vector<std::vector<T>> m_, v_;
    T lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
};

} // namespace seanet
