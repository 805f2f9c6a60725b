#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dcpa/ops.hpp"
#include "dcpa/tensor.hpp"

// Reverse-mode differentiation over a dynamically built DAG. Each op caches
// its forward output and, on backward, folds the output adjoint into its
// inputs' accumulators. Repeated use of a node accumulates additively.

namespace dcpa {

template <typename T>
class NodeT;

template <typename T>
using NodeTPtr = std::shared_ptr<NodeT<T>>;

template <typename T>
class NodeT {
public:
    virtual ~NodeT() = default;
    virtual const char* op_name() const = 0;
    // Folds grad() into the inputs' gradient accumulators.
    virtual void propagate() {}

    const TensorT<T>& value() const { return value_; }
    const std::vector<NodeTPtr<T>>& inputs() const { return inputs_; }
    bool needs_grad() const { return needs_grad_; }

    // Scalar nodes (losses, reductions) keep a 64-bit copy of their value so
    // finite-difference checks are not limited by storage precision.
    double scalar() const { return scalar_; }

    std::vector<T>& grad() {
        if (grad_.size() != value_.size()) grad_.assign(value_.size(), T(0));
        return grad_;
    }
    bool has_grad() const { return !grad_.empty(); }
    TensorT<T> grad_tensor() const {
        if (grad_.empty()) return TensorT<T>(value_.shape());
        return TensorT<T>(value_.shape(), grad_);
    }
    void clear_grad() { grad_.clear(); }

protected:
    NodeT(TensorT<T> value, std::vector<NodeTPtr<T>> inputs)
        : value_(std::move(value)), inputs_(std::move(inputs)) {
        for (const auto& in : inputs_) {
            if (in->needs_grad_) needs_grad_ = true;
        }
    }

    // For ops that compute value_ in the constructor body, after inputs_ is
    // in place.
    explicit NodeT(std::vector<NodeTPtr<T>> inputs) : inputs_(std::move(inputs)) {
        for (const auto& in : inputs_) {
            if (in->needs_grad_) needs_grad_ = true;
        }
    }

    void add_to_input(std::size_t which, const std::vector<T>& g) {
        auto& in = inputs_[which];
        if (!in->needs_grad_) return;
        auto& acc = in->grad();
        for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i];
    }

    TensorT<T> value_;
    std::vector<NodeTPtr<T>> inputs_;
    std::vector<T> grad_;
    bool needs_grad_ = false;
    double scalar_ = 0.0;

    template <typename U>
    friend NodeTPtr<U> make_leaf(TensorT<U> value, bool requires_grad);
};

template <typename T>
class LeafNode final : public NodeT<T> {
public:
    LeafNode(TensorT<T> value, bool requires_grad) : NodeT<T>(std::move(value), {}) {
        this->needs_grad_ = requires_grad;
    }
    const char* op_name() const override { return "leaf"; }
};

template <typename T>
NodeTPtr<T> make_leaf(TensorT<T> value, bool requires_grad) {
    return std::make_shared<LeafNode<T>>(std::move(value), requires_grad);
}

// ---------------------------------------------------------------------------
// Layer ops

template <typename T>
class Conv2dNode final : public NodeT<T> {
public:
    Conv2dNode(NodeTPtr<T> input, NodeTPtr<T> kernels, NodeTPtr<T> bias)
        : NodeT<T>({std::move(input), std::move(kernels), std::move(bias)}) {
        this->value_ = conv2d_forward(this->inputs_[0]->value(), this->inputs_[1]->value(),
                                      this->inputs_[2]->value());
    }
    const char* op_name() const override { return "conv2d"; }

    void propagate() override {
        const TensorT<T>& in = this->inputs_[0]->value();
        const TensorT<T>& ker = this->inputs_[1]->value();
        const int c_in = in.dim(0), h = in.dim(1), w = in.dim(2);
        const int c_out = ker.dim(0), k = ker.dim(2);
        const int oh = h - k + 1, ow = w - k + 1;
        const std::size_t n = static_cast<std::size_t>(oh) * ow;
        const std::size_t kk = static_cast<std::size_t>(c_in) * k * k;
        const std::vector<T>& g = this->grad();

        if (this->inputs_[2]->needs_grad()) {
            auto& gb = this->inputs_[2]->grad();
            for (int o = 0; o < c_out; ++o) {
                const T* row = g.data() + static_cast<std::size_t>(o) * n;
                T s = T(0);
                for (std::size_t i = 0; i < n; ++i) s += row[i];
                gb[static_cast<std::size_t>(o)] += s;
            }
        }
        const bool want_in = this->inputs_[0]->needs_grad();
        const bool want_ker = this->inputs_[1]->needs_grad();
        if (!want_in && !want_ker) return;

        std::vector<T> cols(kk * n);
        if (want_ker) {
            detail::im2col(in.data(), c_in, h, w, k, cols.data());
            auto& gk = this->inputs_[1]->grad();
            detail::gemm_rm_bt_acc(g.data(), cols.data(), gk.data(), c_out, static_cast<Eigen::Index>(n),
                                   static_cast<Eigen::Index>(kk));
        }
        if (want_in) {
            std::vector<T> dcols(kk * n);
            detail::gemm_rm_at(ker.data(), g.data(), dcols.data(), static_cast<Eigen::Index>(kk), c_out,
                               static_cast<Eigen::Index>(n));
            auto& gi = this->inputs_[0]->grad();
            detail::col2im_add(dcols.data(), c_in, h, w, k, gi.data());
        }
    }
};

template <typename T>
class MaxPool2Node final : public NodeT<T> {
public:
    explicit MaxPool2Node(NodeTPtr<T> input) : NodeT<T>({std::move(input)}) {
        this->value_ = maxpool2_forward(this->inputs_[0]->value(), &argmax_);
    }
    const char* op_name() const override { return "maxpool2"; }

    void propagate() override {
        if (!this->inputs_[0]->needs_grad()) return;
        auto& gi = this->inputs_[0]->grad();
        const std::vector<T>& g = this->grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            gi[static_cast<std::size_t>(argmax_[i])] += g[i];
        }
    }

private:
    std::vector<std::int32_t> argmax_;
};

template <typename T>
class UpConv2Node final : public NodeT<T> {
public:
    UpConv2Node(NodeTPtr<T> input, NodeTPtr<T> kernels, NodeTPtr<T> bias)
        : NodeT<T>({std::move(input), std::move(kernels), std::move(bias)}) {
        this->value_ = upconv2_forward(this->inputs_[0]->value(), this->inputs_[1]->value(),
                                       this->inputs_[2]->value());
    }
    const char* op_name() const override { return "upconv2"; }

    void propagate() override {
        const TensorT<T>& in = this->inputs_[0]->value();
        const TensorT<T>& ker = this->inputs_[1]->value();
        const int c_in = in.dim(0), h = in.dim(1), w = in.dim(2);
        const int c_out = ker.dim(1);
        const int ow = 2 * w;
        const std::vector<T>& g = this->grad();

        if (this->inputs_[2]->needs_grad()) {
            auto& gb = this->inputs_[2]->grad();
            const std::size_t plane = static_cast<std::size_t>(2 * h) * ow;
            for (int o = 0; o < c_out; ++o) {
                const T* p = g.data() + static_cast<std::size_t>(o) * plane;
                T s = T(0);
                for (std::size_t i = 0; i < plane; ++i) s += p[i];
                gb[static_cast<std::size_t>(o)] += s;
            }
        }
        const bool want_in = this->inputs_[0]->needs_grad();
        const bool want_ker = this->inputs_[1]->needs_grad();
        if (!want_in && !want_ker) return;
        std::vector<T>* gi = want_in ? &this->inputs_[0]->grad() : nullptr;
        std::vector<T>* gk = want_ker ? &this->inputs_[1]->grad() : nullptr;
        for (int c = 0; c < c_in; ++c) {
            for (int o = 0; o < c_out; ++o) {
                const T k00 = ker.at4(c, o, 0, 0), k01 = ker.at4(c, o, 0, 1);
                const T k10 = ker.at4(c, o, 1, 0), k11 = ker.at4(c, o, 1, 1);
                T s00 = T(0), s01 = T(0), s10 = T(0), s11 = T(0);
                for (int y = 0; y < h; ++y) {
                    const T* src = in.data() + (static_cast<std::size_t>(c) * h + y) * w;
                    const T* g0 = g.data() + (static_cast<std::size_t>(o) * 2 * h + 2 * y) * ow;
                    const T* g1 = g0 + ow;
                    T* drow = gi ? gi->data() + (static_cast<std::size_t>(c) * h + y) * w : nullptr;
                    for (int x = 0; x < w; ++x) {
                        const T a = g0[2 * x], b = g0[2 * x + 1];
                        const T cc = g1[2 * x], d = g1[2 * x + 1];
                        if (drow) drow[x] += a * k00 + b * k01 + cc * k10 + d * k11;
                        if (gk) {
                            const T v = src[x];
                            s00 += v * a;
                            s01 += v * b;
                            s10 += v * cc;
                            s11 += v * d;
                        }
                    }
                }
                if (gk) {
                    const std::size_t base = (static_cast<std::size_t>(c) * c_out + o) * 4;
                    (*gk)[base] += s00;
                    (*gk)[base + 1] += s01;
                    (*gk)[base + 2] += s10;
                    (*gk)[base + 3] += s11;
                }
            }
        }
    }
};

template <typename T>
class ReluNode final : public NodeT<T> {
public:
    explicit ReluNode(NodeTPtr<T> input) : NodeT<T>({std::move(input)}) {
        this->value_ = relu_forward(this->inputs_[0]->value());
    }
    const char* op_name() const override { return "relu"; }

    void propagate() override {
        if (!this->inputs_[0]->needs_grad()) return;
        const TensorT<T>& in = this->inputs_[0]->value();
        auto& gi = this->inputs_[0]->grad();
        const std::vector<T>& g = this->grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (in[i] > T(0)) gi[i] += g[i];
        }
    }
};

template <typename T>
class Softmax2Node final : public NodeT<T> {
public:
    explicit Softmax2Node(NodeTPtr<T> input) : NodeT<T>({std::move(input)}) {
        this->value_ = softmax2_forward(this->inputs_[0]->value());
    }
    const char* op_name() const override { return "softmax_channels"; }

    void propagate() override {
        if (!this->inputs_[0]->needs_grad()) return;
        const std::size_t n = this->value_.size() / 2;
        const T* q0 = this->value_.data();
        const T* q1 = this->value_.data() + n;
        const std::vector<T>& g = this->grad();
        auto& gi = this->inputs_[0]->grad();
        for (std::size_t i = 0; i < n; ++i) {
            const T dot = g[i] * q0[i] + g[n + i] * q1[i];
            gi[i] += q0[i] * (g[i] - dot);
            gi[n + i] += q1[i] * (g[n + i] - dot);
        }
    }
};

template <typename T>
class CenterCropNode final : public NodeT<T> {
public:
    CenterCropNode(NodeTPtr<T> input, int target_h, int target_w) : NodeT<T>({std::move(input)}) {
        this->value_ = center_crop_forward(this->inputs_[0]->value(), target_h, target_w);
    }
    const char* op_name() const override { return "center_crop"; }

    void propagate() override {
        if (!this->inputs_[0]->needs_grad()) return;
        const Shape& s = this->inputs_[0]->value().shape();
        const int h = s[1], w = s[2];
        const int th = this->value_.dim(1), tw = this->value_.dim(2);
        const int oy = (h - th) / 2, ox = (w - tw) / 2;
        auto& gi = this->inputs_[0]->grad();
        const std::vector<T>& g = this->grad();
        for (int c = 0; c < s[0]; ++c) {
            for (int y = 0; y < th; ++y) {
                T* dst = gi.data() + (static_cast<std::size_t>(c) * h + oy + y) * w + ox;
                const T* src = g.data() + (static_cast<std::size_t>(c) * th + y) * tw;
                for (int x = 0; x < tw; ++x) dst[x] += src[x];
            }
        }
    }
};

template <typename T>
class ConcatChannelsNode final : public NodeT<T> {
public:
    ConcatChannelsNode(NodeTPtr<T> a, NodeTPtr<T> b) : NodeT<T>({std::move(a), std::move(b)}) {
        this->value_ = concat_channels_forward(this->inputs_[0]->value(), this->inputs_[1]->value());
    }
    const char* op_name() const override { return "concat_channels"; }

    void propagate() override {
        const std::size_t na = this->inputs_[0]->value().size();
        const std::vector<T>& g = this->grad();
        if (this->inputs_[0]->needs_grad()) {
            auto& ga = this->inputs_[0]->grad();
            for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
        }
        if (this->inputs_[1]->needs_grad()) {
            auto& gb = this->inputs_[1]->grad();
            const std::size_t nb = this->inputs_[1]->value().size();
            for (std::size_t i = 0; i < nb; ++i) gb[i] += g[na + i];
        }
    }
};

// ---------------------------------------------------------------------------
// Scalar reductions

template <typename T>
class SumAllNode final : public NodeT<T> {
public:
    explicit SumAllNode(NodeTPtr<T> input) : NodeT<T>({std::move(input)}) {
        this->value_ = TensorT<T>({1});
        double acc = 0.0;
        const TensorT<T>& v = this->inputs_[0]->value();
        for (std::size_t i = 0; i < v.size(); ++i) acc += static_cast<double>(v[i]);
        this->scalar_ = acc;
        this->value_[0] = static_cast<T>(acc);
    }
    const char* op_name() const override { return "sum_all"; }

    void propagate() override {
        if (!this->inputs_[0]->needs_grad()) return;
        const T g = this->grad()[0];
        auto& gi = this->inputs_[0]->grad();
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g;
    }
};

template <typename T>
class SumSquaresNode final : public NodeT<T> {
public:
    explicit SumSquaresNode(NodeTPtr<T> input) : NodeT<T>({std::move(input)}) {
        this->value_ = TensorT<T>({1});
        double acc = 0.0;
        const TensorT<T>& v = this->inputs_[0]->value();
        for (std::size_t i = 0; i < v.size(); ++i) {
            acc += static_cast<double>(v[i]) * static_cast<double>(v[i]);
        }
        this->scalar_ = acc;
        this->value_[0] = static_cast<T>(acc);
    }
    const char* op_name() const override { return "sum_squares"; }

    void propagate() override {
        if (!this->inputs_[0]->needs_grad()) return;
        const T g = this->grad()[0];
        const TensorT<T>& v = this->inputs_[0]->value();
        auto& gi = this->inputs_[0]->grad();
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += T(2) * v[i] * g;
    }
};

// sum_i weights[i] * input[i]; used by tests to scalarize op outputs.
template <typename T>
class WeightedSumNode final : public NodeT<T> {
public:
    WeightedSumNode(NodeTPtr<T> input, TensorT<T> weights)
        : NodeT<T>({std::move(input)}), weights_(std::move(weights)) {
        this->value_ = TensorT<T>({1});
        const TensorT<T>& v = this->inputs_[0]->value();
        if (weights_.size() != v.size()) {
            throw ShapeError("weighted_sum: weights size " + std::to_string(weights_.size()) +
                             " != input size " + std::to_string(v.size()));
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            acc += static_cast<double>(weights_[i]) * static_cast<double>(v[i]);
        }
        this->scalar_ = acc;
        this->value_[0] = static_cast<T>(acc);
    }
    const char* op_name() const override { return "weighted_sum"; }

    void propagate() override {
        if (!this->inputs_[0]->needs_grad()) return;
        const T g = this->grad()[0];
        auto& gi = this->inputs_[0]->grad();
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += weights_[i] * g;
    }

private:
    TensorT<T> weights_;
};

// Arithmetic mean of scalar nodes (per-sample losses of a mini-batch).
template <typename T>
class MeanScalarsNode final : public NodeT<T> {
public:
    explicit MeanScalarsNode(std::vector<NodeTPtr<T>> terms) : NodeT<T>(std::move(terms)) {
        this->value_ = TensorT<T>({1});
        if (this->inputs_.empty()) throw ShapeError("mean_scalars: no terms");
        double acc = 0.0;
        for (const auto& t : this->inputs_) {
            if (t->value().size() != 1) throw ShapeError("mean_scalars: all terms must be scalars");
            acc += t->scalar();
        }
        this->scalar_ = acc / static_cast<double>(this->inputs_.size());
        this->value_[0] = static_cast<T>(this->scalar_);
    }
    const char* op_name() const override { return "mean_scalars"; }

    void propagate() override {
        const T g = this->grad()[0] / static_cast<T>(this->inputs_.size());
        for (auto& in : this->inputs_) {
            if (in->needs_grad()) in->grad()[0] += g;
        }
    }
};

// ---------------------------------------------------------------------------
// Builders

template <typename T>
NodeTPtr<T> conv2d(NodeTPtr<T> input, NodeTPtr<T> kernels, NodeTPtr<T> bias) {
    return std::make_shared<Conv2dNode<T>>(std::move(input), std::move(kernels), std::move(bias));
}
template <typename T>
NodeTPtr<T> maxpool2(NodeTPtr<T> input) {
    return std::make_shared<MaxPool2Node<T>>(std::move(input));
}
template <typename T>
NodeTPtr<T> upconv2(NodeTPtr<T> input, NodeTPtr<T> kernels, NodeTPtr<T> bias) {
    return std::make_shared<UpConv2Node<T>>(std::move(input), std::move(kernels), std::move(bias));
}
template <typename T>
NodeTPtr<T> relu(NodeTPtr<T> input) {
    return std::make_shared<ReluNode<T>>(std::move(input));
}
template <typename T>
NodeTPtr<T> softmax_channels(NodeTPtr<T> input) {
    return std::make_shared<Softmax2Node<T>>(std::move(input));
}
template <typename T>
NodeTPtr<T> center_crop(NodeTPtr<T> input, int target_h, int target_w) {
    return std::make_shared<CenterCropNode<T>>(std::move(input), target_h, target_w);
}
template <typename T>
NodeTPtr<T> concat_channels(NodeTPtr<T> a, NodeTPtr<T> b) {
    return std::make_shared<ConcatChannelsNode<T>>(std::move(a), std::move(b));
}
template <typename T>
NodeTPtr<T> sum_all(NodeTPtr<T> input) {
    return std::make_shared<SumAllNode<T>>(std::move(input));
}
template <typename T>
NodeTPtr<T> sum_squares(NodeTPtr<T> input) {
    return std::make_shared<SumSquaresNode<T>>(std::move(input));
}
template <typename T>
NodeTPtr<T> weighted_sum(NodeTPtr<T> input, TensorT<T> weights) {
    return std::make_shared<WeightedSumNode<T>>(std::move(input), std::move(weights));
}
template <typename T>
NodeTPtr<T> mean_scalars(std::vector<NodeTPtr<T>> terms) {
    return std::make_shared<MeanScalarsNode<T>>(std::move(terms));
}

// ---------------------------------------------------------------------------
// Reverse traversal

// Seeds the scalar root with adjoint 1 and runs every reachable node's
// propagate() in reverse topological order.
template <typename T>
void backward(const NodeTPtr<T>& root) {
    if (!root) throw ShapeError("backward: null root");
    if (root->value().size() != 1) {
        throw ShapeError("backward: root must be scalar, got " + shape_str(root->value().shape()));
    }
    // Iterative post-order DFS; the graph is acyclic by construction.
    std::vector<NodeT<T>*> order;
    std::unordered_set<NodeT<T>*> visited;
    struct Frame {
        NodeT<T>* node;
        std::size_t next_input;
    };
    std::vector<Frame> stack;
    if (root->needs_grad()) {
        stack.push_back({root.get(), 0});
        visited.insert(root.get());
    }
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_input < f.node->inputs().size()) {
            NodeT<T>* in = f.node->inputs()[f.next_input++].get();
            if (in->needs_grad() && visited.insert(in).second) {
                stack.push_back({in, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }
    root->grad()[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        (*it)->propagate();
    }
}

// Central finite differences of f around the current parameter values.
// Parameters are perturbed in place and restored; f() must be deterministic
// and is expected to report the loss in double precision.
template <typename T>
std::vector<std::vector<double>> finite_diff_grad(const std::function<double()>& f,
                                                  const std::vector<TensorT<T>*>& params, double step) {
    std::vector<std::vector<double>> grads;
    grads.reserve(params.size());
    for (TensorT<T>* p : params) {
        std::vector<double> g(p->size());
        for (std::size_t i = 0; i < p->size(); ++i) {
            const T saved = (*p)[i];
            (*p)[i] = static_cast<T>(static_cast<double>(saved) + step);
            const double f_plus = f();
            (*p)[i] = static_cast<T>(static_cast<double>(saved) - step);
            const double f_minus = f();
            (*p)[i] = saved;
            g[i] = (f_plus - f_minus) / (2.0 * step);
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

}  // namespace dcpa
