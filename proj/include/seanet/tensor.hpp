#pragma once

#include "seanet/common.hpp"

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>

namespace seanet {

/// Global autograd switch (thread-local). Ops record backward closures only
/// while enabled and at least one input requires gradients.
struct GradMode {
    static bool& enabled() {
        thread_local bool e = true;
        return e;
    }
};

/// RAII guard disabling gradient recording (evaluation / data plumbing).
struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(GradMode::enabled()) { GradMode::enabled() = false; }
    ~NoGradGuard() { GradMode::enabled() = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

/// One vertex of the reverse-mode tape: value, accumulated gradient, the
/// parents it was computed from and the closure that pushes grad to them.
template <typename T>
struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad; // allocated lazily on first accumulation
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node<T>>> parents;
    std::function<void()> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
};

/// Shared handle to a Node. Copying a Tensor aliases the same storage; all
/// ops allocate fresh output nodes, so recorded graphs are never mutated.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T(0), bool requires_grad = false)
        : n_(std::make_shared<Node<T>>()) {
        n_->shape = std::move(shape);
        n_->value.assign(static_cast<size_t>(numel_of(n_->shape)), fill);
        n_->requires_grad = requires_grad;
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    static Tensor full(Shape shape, T v) { return Tensor(std::move(shape), v); }

    static Tensor scalar(T v) { return Tensor(Shape{}, v); }

    static Tensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false) {
        SEANET_CHECK(numel_of(shape) == static_cast<int64_t>(data.size()),
                     "from_data: shape ", shape_str(shape), " needs ", numel_of(shape),
                     " values, got ", data.size());
        Tensor t;
        t.n_ = std::make_shared<Node<T>>();
        t.n_->shape = std::move(shape);
        t.n_->value = std::move(data);
        t.n_->requires_grad = requires_grad;
        return t;
    }

    bool defined() const { return static_cast<bool>(n_); }

    const Shape& shape() const { return n_->shape; }
    size_t ndim() const { return n_->shape.size(); }

    int64_t dim(int i) const {
        int n = static_cast<int>(n_->shape.size());
        if (i < 0) i += n;
        SEANET_CHECK(i >= 0 && i < n, "dim index ", i, " out of range for ", shape_str(n_->shape));
        return n_->shape[static_cast<size_t>(i)];
    }

    int64_t numel() const { return static_cast<int64_t>(n_->value.size()); }

    T* data() { return n_->value.data(); }
    const T* data() const { return n_->value.data(); }
    std::vector<T>& vec() { return n_->value; }
    const std::vector<T>& vec() const { return n_->value; }

    // Flat and shaped element access (row-major), mainly for tests and oracles.
    T& operator[](int64_t i) { return n_->value[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return n_->value[static_cast<size_t>(i)]; }

    T& at(int64_t i0) { return n_->value[static_cast<size_t>(i0)]; }
    T& at(int64_t i0, int64_t i1) {
        return n_->value[static_cast<size_t>(i0 * n_->shape[1] + i1)];
    }
    T& at(int64_t i0, int64_t i1, int64_t i2) {
        return n_->value[static_cast<size_t>((i0 * n_->shape[1] + i1) * n_->shape[2] + i2)];
    }
    T& at(int64_t i0, int64_t i1, int64_t i2, int64_t i3) {
        return n_->value[static_cast<size_t>(
            ((i0 * n_->shape[1] + i1) * n_->shape[2] + i2) * n_->shape[3] + i3)];
    }
    const T& at(int64_t i0) const { return const_cast<Tensor*>(this)->at(i0); }
    const T& at(int64_t i0, int64_t i1) const { return const_cast<Tensor*>(this)->at(i0, i1); }
    const T& at(int64_t i0, int64_t i1, int64_t i2) const {
        return const_cast<Tensor*>(this)->at(i0, i1, i2);
    }
    const T& at(int64_t i0, int64_t i1, int64_t i2, int64_t i3) const {
        return const_cast<Tensor*>(this)->at(i0, i1, i2, i3);
    }

    T item() const {
        SEANET_CHECK(n_ && n_->value.size() == 1, "item() requires a 1-element tensor, got ",
                     defined() ? shape_str(n_->shape) : std::string("<undefined>"));
        return n_->value[0];
    }

    bool requires_grad() const { return n_->requires_grad; }
    Tensor& set_requires_grad(bool b) {
        n_->requires_grad = b;
        return *this;
    }

    std::vector<T>& grad() {
        n_->ensure_grad();
        return n_->grad;
    }
    const std::vector<T>& grad() const {
        n_->ensure_grad();
        return n_->grad;
    }
    bool has_grad() const { return !n_->grad.empty(); }
    void zero_grad() {
        if (!n_->grad.empty()) std::fill(n_->grad.begin(), n_->grad.end(), T(0));
    }

    /// Value copy detached from the tape.
    Tensor detach() const {
        Tensor t;
        t.n_ = std::make_shared<Node<T>>();
        t.n_->shape = n_->shape;
        t.n_->value = n_->value;
        return t;
    }

    /// Reverse-mode sweep from a scalar result. Leaf grads accumulate across
    /// calls (standard semantics); intermediates of a fresh graph start at 0.
    void backward() {
        SEANET_CHECK(n_ && n_->value.size() == 1,
                     "backward() requires a scalar tensor, got ", shape_str(n_->shape));
        if (!n_->requires_grad) return;
        // iterative post-order DFS over grad-requiring subgraph
        std::vector<Node<T>*> order;
        std::unordered_set<Node<T>*> seen;
        struct Frame {
            Node<T>* node;
            size_t next;
        };
        std::vector<Frame> stack{{n_.get(), 0}};
        seen.insert(n_.get());
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next < f.node->parents.size()) {
                Node<T>* c = f.node->parents[f.next++].get();
                if (c->requires_grad && !seen.count(c)) {
                    seen.insert(c);
                    stack.push_back({c, 0});
                }
            } else {
                order.push_back(f.node);
                stack.pop_back();
            }
        }
        n_->ensure_grad();
        n_->grad[0] = T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            if ((*it)->backward_fn) {
                (*it)->ensure_grad();
                (*it)->backward_fn();
            }
        }
    }

    std::shared_ptr<Node<T>> node() const { return n_; }

private:
    std::shared_ptr<Node<T>> n_;
};

namespace detail {

/// Record the autograd edge for `out`: mark requires_grad, attach parents and
/// the backward closure, but only when recording is active and some input
/// needs gradients. `fn` must itself capture the node pointers it needs.
template <typename T>
void wire(Tensor<T>& out, const std::vector<Tensor<T>>& inputs, std::function<void()> fn) {
    if (!GradMode::enabled()) return;
    bool any = false;
    for (const auto& t : inputs) any = any || t.requires_grad();
    if (!any) return;
    auto on = out.node();
    on->requires_grad = true;
    on->parents.reserve(inputs.size());
    for (const auto& t : inputs) on->parents.push_back(t.node());
    on->backward_fn = std::move(fn);
}

} // namespace detail

} // namespace seanet
