#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dcpa/autodiff.hpp"
#include "dcpa/ops.hpp"
#include "dcpa/rng.hpp"
#include "dcpa/tensor.hpp"

// Valid-padding encoder-decoder network. Each encoder stage is two 3x3
// convolutions + ReLU followed by a 2x2 max-pool; the bottleneck is two 3x3
// convolutions; each decoder stage is a 2x2 stride-2 up-convolution halving
// the channels, concatenation with the center-cropped skip tensor, and two
// 3x3 convolutions + ReLU; a final 1x1 convolution maps to the two class
// channels, followed by a per-pixel softmax.

namespace dcpa {

struct ModelConfig {
    int depth = 4;
    int base_width = 64;  // R1 = 64, R2 = 32
    int in_channels = 3;
    int num_classes = 2;
    std::uint64_t seed = 0;

    void validate() const {
        if (depth < 1) throw ConfigError("model: depth must be >= 1, got " + std::to_string(depth));
        if (base_width < 1) throw ConfigError("model: base_width must be >= 1");
        if (in_channels < 1) throw ConfigError("model: in_channels must be >= 1");
        if (num_classes != 2) throw ConfigError("model: num_classes must be 2");
    }
};

// Input/output patch geometry. The input extent exceeds the output extent by
// 2*margin; the margin depends only on the depth and the two-convs-per-stage
// layout (8 at depth 1, then 2*m+4 per extra stage: 20, 44, 92, ...).
struct GeometrySpec {
    int output_w = 0;
    int output_h = 0;
    int input_w = 0;
    int input_h = 0;
    int margin = 0;
};

inline int unet_margin(int depth) {
    int m = 8;
    for (int d = 1; d < depth; ++d) m = 2 * m + 4;
    return m;
}

// An output extent is realizable iff every decoder stage, walked backwards
// (u -> (u+4)/2), lands on an even extent.
inline bool valid_output_extent(int depth, int extent) {
    if (extent < 2) return false;
    long long u = extent;
    for (int d = 0; d < depth; ++d) {
        if (u % 2 != 0) return false;
        u = (u + 4) / 2;
    }
    return u - 4 >= 1;  // bottleneck input must exist
}

inline bool valid_input_extent(int depth, int extent) {
    long long e = extent;
    for (int d = 0; d < depth; ++d) {
        e -= 4;
        if (e < 2 || e % 2 != 0) return false;
        e /= 2;
    }
    return e - 4 >= 1;
}

namespace detail {

inline int nearest_valid_output(int depth, int extent, int direction) {
    for (int o = extent + direction;; o += direction) {
        if (o < 2) return -1;
        if (valid_output_extent(depth, o)) return o;
        if (o > extent + 4096) return -1;
    }
}

inline void throw_bad_output_extent(int depth, int extent) {
    const int lo = nearest_valid_output(depth, extent, -1);
    const int hi = nearest_valid_output(depth, extent, +1);
    std::string msg = "geometry: output extent " + std::to_string(extent) +
                      " is not realizable at depth " + std::to_string(depth) + "; nearest valid sizes:";
    if (lo > 0) msg += " " + std::to_string(lo);
    if (hi > 0) msg += (lo > 0 ? ", " : " ") + std::to_string(hi);
    throw ShapeError(msg);
}

}  // namespace detail

inline int input_extent_for_output(int depth, int extent) {
    if (!valid_output_extent(depth, extent)) detail::throw_bad_output_extent(depth, extent);
    long long u = extent;
    for (int d = 0; d < depth; ++d) u = (u + 4) / 2;
    long long e = u + 4;
    for (int d = 0; d < depth; ++d) e = 2 * e + 4;
    return static_cast<int>(e);
}

inline int output_extent_for_input(int depth, int extent) {
    if (!valid_input_extent(depth, extent)) {
        throw ShapeError("geometry: input extent " + std::to_string(extent) + " is not realizable at depth " +
                         std::to_string(depth));
    }
    long long e = extent;
    for (int d = 0; d < depth; ++d) e = (e - 4) / 2;
    long long u = e - 4;
    for (int d = 0; d < depth; ++d) u = 2 * u - 4;
    return static_cast<int>(u);
}

inline GeometrySpec geometry_for_output(int depth, int out_w, int out_h) {
    GeometrySpec g;
    g.output_w = out_w;
    g.output_h = out_h;
    g.input_w = input_extent_for_output(depth, out_w);
    g.input_h = input_extent_for_output(depth, out_h);
    g.margin = (g.input_w - out_w) / 2;
    return g;
}

inline GeometrySpec geometry_for_input(int depth, int in_w, int in_h) {
    GeometrySpec g;
    g.input_w = in_w;
    g.input_h = in_h;
    g.output_w = output_extent_for_input(depth, in_w);
    g.output_h = output_extent_for_input(depth, in_h);
    g.margin = (in_w - g.output_w) / 2;
    return g;
}

// Exact parameter count from layer arithmetic; no instantiation.
inline std::int64_t param_count(const ModelConfig& cfg) {
    cfg.validate();
    auto conv = [](std::int64_t cin, std::int64_t cout, std::int64_t k) { return cin * cout * k * k + cout; };
    auto width = [&](int stage) { return static_cast<std::int64_t>(cfg.base_width) << stage; };
    std::int64_t total = 0;
    for (int s = 0; s < cfg.depth; ++s) {
        const std::int64_t cin = s == 0 ? cfg.in_channels : width(s - 1);
        total += conv(cin, width(s), 3) + conv(width(s), width(s), 3);
    }
    total += conv(width(cfg.depth - 1), width(cfg.depth), 3) + conv(width(cfg.depth), width(cfg.depth), 3);
    for (int s = cfg.depth - 1; s >= 0; --s) {
        const std::int64_t lower = s == cfg.depth - 1 ? width(cfg.depth) : width(s + 1);
        total += conv(lower, width(s), 2);                    // up-convolution
        total += conv(2 * width(s), width(s), 3) + conv(width(s), width(s), 3);
    }
    total += conv(width(0), cfg.num_classes, 1);
    return total;
}

template <typename T>
struct NamedParamT {
    std::string name;
    TensorT<T> tensor;
};

template <typename T>
class UnetT {
public:
    explicit UnetT(const ModelConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        Rng rng(seed_stream({cfg_.seed, 0x756e6574ULL}));
        auto width = [&](int s) { return cfg_.base_width << s; };
        for (int s = 0; s < cfg_.depth; ++s) {
            const int cin = s == 0 ? cfg_.in_channels : width(s - 1);
            add_conv("enc" + std::to_string(s) + ".conv1", cin, width(s), 3, rng);
            add_conv("enc" + std::to_string(s) + ".conv2", width(s), width(s), 3, rng);
        }
        add_conv("bottleneck.conv1", width(cfg_.depth - 1), width(cfg_.depth), 3, rng);
        add_conv("bottleneck.conv2", width(cfg_.depth), width(cfg_.depth), 3, rng);
        for (int s = cfg_.depth - 1; s >= 0; --s) {
            const int lower = s == cfg_.depth - 1 ? width(cfg_.depth) : width(s + 1);
            add_upconv("dec" + std::to_string(s) + ".up", lower, width(s), rng);
            add_conv("dec" + std::to_string(s) + ".conv1", 2 * width(s), width(s), 3, rng);
            add_conv("dec" + std::to_string(s) + ".conv2", width(s), width(s), 3, rng);
        }
        add_conv("final", width(0), cfg_.num_classes, 1, rng);
    }

    const ModelConfig& config() const { return cfg_; }
    std::vector<NamedParamT<T>>& params() { return params_; }
    const std::vector<NamedParamT<T>>& params() const { return params_; }

    std::int64_t parameter_count() const {
        std::int64_t n = 0;
        for (const auto& p : params_) n += static_cast<std::int64_t>(p.tensor.size());
        return n;
    }

    // Class-probability map for one input patch; plain tensor math, no graph.
    TensorT<T> forward(const TensorT<T>& input) const {
        check_input(input);
        std::size_t pi = 0;
        auto take = [&]() -> const TensorT<T>& { return params_[pi++].tensor; };
        std::vector<TensorT<T>> skips;
        TensorT<T> x = input;
        for (int s = 0; s < cfg_.depth; ++s) {
            const TensorT<T>& w1 = take();
            const TensorT<T>& b1 = take();
            x = relu_forward(conv2d_forward(x, w1, b1));
            const TensorT<T>& w2 = take();
            const TensorT<T>& b2 = take();
            x = relu_forward(conv2d_forward(x, w2, b2));
            skips.push_back(x);
            x = maxpool2_forward(x);
        }
        {
            const TensorT<T>& w1 = take();
            const TensorT<T>& b1 = take();
            x = relu_forward(conv2d_forward(x, w1, b1));
            const TensorT<T>& w2 = take();
            const TensorT<T>& b2 = take();
            x = relu_forward(conv2d_forward(x, w2, b2));
        }
        for (int s = cfg_.depth - 1; s >= 0; --s) {
            const TensorT<T>& wu = take();
            const TensorT<T>& bu = take();
            x = upconv2_forward(x, wu, bu);
            TensorT<T> skip = center_crop_forward(skips[static_cast<std::size_t>(s)], x.dim(1), x.dim(2));
            x = concat_channels_forward(skip, x);
            const TensorT<T>& w1 = take();
            const TensorT<T>& b1 = take();
            x = relu_forward(conv2d_forward(x, w1, b1));
            const TensorT<T>& w2 = take();
            const TensorT<T>& b2 = take();
            x = relu_forward(conv2d_forward(x, w2, b2));
        }
        const TensorT<T>& wf = take();
        const TensorT<T>& bf = take();
        x = conv2d_forward(x, wf, bf);
        return softmax2_forward(x);
    }

    // Graph forward for training. Fresh leaves wrap the current parameter
    // values; `leaves`, when non-null, receives them aligned with params().
    NodeTPtr<T> forward_graph(const TensorT<T>& input, std::vector<NodeTPtr<T>>* leaves) const {
        check_input(input);
        std::vector<NodeTPtr<T>> lv;
        lv.reserve(params_.size());
        for (const auto& p : params_) lv.push_back(make_leaf(p.tensor, true));
        std::size_t pi = 0;
        auto take = [&]() -> NodeTPtr<T> { return lv[pi++]; };
        std::vector<NodeTPtr<T>> skips;
        NodeTPtr<T> x = make_leaf(input, false);
        for (int s = 0; s < cfg_.depth; ++s) {
            auto w1 = take(), b1 = take();
            x = relu(conv2d(x, w1, b1));
            auto w2 = take(), b2 = take();
            x = relu(conv2d(x, w2, b2));
            skips.push_back(x);
            x = maxpool2(x);
        }
        {
            auto w1 = take(), b1 = take();
            x = relu(conv2d(x, w1, b1));
            auto w2 = take(), b2 = take();
            x = relu(conv2d(x, w2, b2));
        }
        for (int s = cfg_.depth - 1; s >= 0; --s) {
            auto wu = take(), bu = take();
            x = upconv2(x, wu, bu);
            auto skip = center_crop(skips[static_cast<std::size_t>(s)], x->value().dim(1), x->value().dim(2));
            x = concat_channels(skip, x);
            auto w1 = take(), b1 = take();
            x = relu(conv2d(x, w1, b1));
            auto w2 = take(), b2 = take();
            x = relu(conv2d(x, w2, b2));
        }
        auto wf = take(), bf = take();
        x = softmax_channels(conv2d(x, wf, bf));
        if (leaves) *leaves = std::move(lv);
        return x;
    }

private:
    void check_input(const TensorT<T>& input) const {
        if (input.rank() != 3 || input.dim(0) != cfg_.in_channels) {
            throw ShapeError("forward: expected [" + std::to_string(cfg_.in_channels) +
                             ",H,W] input, got " + shape_str(input.shape()));
        }
        if (!valid_input_extent(cfg_.depth, input.dim(1)) || !valid_input_extent(cfg_.depth, input.dim(2))) {
            throw ShapeError("forward: input size " + std::to_string(input.dim(2)) + "x" +
                             std::to_string(input.dim(1)) + " does not match a depth-" +
                             std::to_string(cfg_.depth) + " geometry");
        }
    }

    void add_conv(const std::string& name, int cin, int cout, int k, Rng& rng) {
        TensorT<T> w({cout, cin, k, k});
        he_fill(w, cin * k * k, rng);
        params_.push_back({name + ".weight", std::move(w)});
        params_.push_back({name + ".bias", TensorT<T>({cout})});
    }

    void add_upconv(const std::string& name, int cin, int cout, Rng& rng) {
        TensorT<T> w({cin, cout, 2, 2});
        he_fill(w, cin * 4, rng);
        params_.push_back({name + ".weight", std::move(w)});
        params_.push_back({name + ".bias", TensorT<T>({cout})});
    }

    static void he_fill(TensorT<T>& w, int fan_in, Rng& rng) {
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] = static_cast<T>(rng.next_normal() * stddev);
        }
    }

    ModelConfig cfg_;
    std::vector<NamedParamT<T>> params_;
};

using Unet = UnetT<float>;

}  // namespace dcpa
