#pragma once

// Independent reference implementations used as test oracles. These stay
// deliberately naive (plain nested loops, union-find labeling) so they share
// no code path with the implementations they check.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "dcpa/mask.hpp"
#include "dcpa/tensor.hpp"

namespace oracle {

template <typename T>
dcpa::TensorT<T> conv2d_ref(const dcpa::TensorT<T>& in, const dcpa::TensorT<T>& ker, const dcpa::TensorT<T>& bias) {
    const int ci = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int co = ker.dim(0), k = ker.dim(2);
    const int oh = h - k + 1, ow = w - k + 1;
    dcpa::TensorT<T> out({co, oh, ow});
    for (int o = 0; o < co; ++o) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                double acc = static_cast<double>(bias[static_cast<std::size_t>(o)]);
                for (int c = 0; c < ci; ++c) {
                    for (int i = 0; i < k; ++i) {
                        for (int j = 0; j < k; ++j) {
                            acc += static_cast<double>(in.at(c, y + i, x + j)) *
                                   static_cast<double>(ker.at4(o, c, i, j));
                        }
                    }
                }
                out.at(o, y, x) = static_cast<T>(acc);
            }
        }
    }
    return out;
}

template <typename T>
dcpa::TensorT<T> maxpool2_ref(const dcpa::TensorT<T>& in) {
    const int c_in = in.dim(0), h = in.dim(1), w = in.dim(2);
    dcpa::TensorT<T> out({c_in, h / 2, w / 2});
    for (int c = 0; c < c_in; ++c) {
        for (int y = 0; y < h / 2; ++y) {
            for (int x = 0; x < w / 2; ++x) {
                T best = in.at(c, 2 * y, 2 * x);
                best = std::max(best, in.at(c, 2 * y, 2 * x + 1));
                best = std::max(best, in.at(c, 2 * y + 1, 2 * x));
                best = std::max(best, in.at(c, 2 * y + 1, 2 * x + 1));
                out.at(c, y, x) = best;
            }
        }
    }
    return out;
}

template <typename T>
dcpa::TensorT<T> upconv2_ref(const dcpa::TensorT<T>& in, const dcpa::TensorT<T>& ker, const dcpa::TensorT<T>& bias) {
    const int ci = in.dim(0), h = in.dim(1), w = in.dim(2);
    const int co = ker.dim(1);
    dcpa::TensorT<T> out({co, 2 * h, 2 * w});
    for (int o = 0; o < co; ++o) {
        for (int y = 0; y < 2 * h; ++y) {
            for (int x = 0; x < 2 * w; ++x) out.at(o, y, x) = bias[static_cast<std::size_t>(o)];
        }
    }
    for (int c = 0; c < ci; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int o = 0; o < co; ++o) {
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            out.at(o, 2 * y + dy, 2 * x + dx) += in.at(c, y, x) * ker.at4(c, o, dy, dx);
                        }
                    }
                }
            }
        }
    }
    return out;
}

// Mirror index by explicit folding instead of modular arithmetic.
inline int reflect_ref(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

// Union-find connected-component labeling (8- or 4-connectivity); returns
// per-pixel root labels, -1 for background.
inline std::vector<int> label_components_ref(const dcpa::SegMask& mask, int connectivity) {
    const int h = mask.h, w = mask.w;
    const int n = h * w;
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    };
    auto unite = [&](int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!mask.at(y, x)) continue;
            const int i = y * w + x;
            auto try_unite = [&](int ny, int nx) {
                if (ny >= 0 && ny < h && nx >= 0 && nx < w && mask.at(ny, nx)) unite(i, ny * w + nx);
            };
            try_unite(y, x - 1);
            try_unite(y - 1, x);
            if (connectivity == 8) {
                try_unite(y - 1, x - 1);
                try_unite(y - 1, x + 1);
            }
        }
    }
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < n; ++i) {
        if (mask.data[static_cast<std::size_t>(i)]) labels[static_cast<std::size_t>(i)] = find(i);
    }
    return labels;
}

// Largest component via union-find labeling (ties: smallest root, which is
// the first pixel in row-major order).
inline dcpa::SegMask largest_component_ref(const dcpa::SegMask& mask) {
    const auto labels = label_components_ref(mask, 8);
    std::vector<std::int64_t> area(mask.size(), 0);
    for (int lbl : labels) {
        if (lbl >= 0) ++area[static_cast<std::size_t>(lbl)];
    }
    int best = -1;
    for (std::size_t i = 0; i < area.size(); ++i) {
        if (area[i] > 0 && (best < 0 || area[i] > area[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
    }
    dcpa::SegMask out(mask.h, mask.w);
    if (best >= 0) {
        for (std::size_t i = 0; i < mask.size(); ++i) out.data[i] = labels[i] == best ? 1 : 0;
    }
    return out;
}

// Hole filling via 4-connected background labeling: a background component is
// a hole iff none of its pixels touches the border.
inline dcpa::SegMask fill_holes_ref(const dcpa::SegMask& mask) {
    dcpa::SegMask inv(mask.h, mask.w);
    for (std::size_t i = 0; i < mask.size(); ++i) inv.data[i] = mask.data[i] ? 0 : 1;
    const auto labels = label_components_ref(inv, 4);
    std::vector<std::uint8_t> touches(mask.size(), 0);
    for (int x = 0; x < mask.w; ++x) {
        if (labels[static_cast<std::size_t>(x)] >= 0) touches[static_cast<std::size_t>(labels[static_cast<std::size_t>(x)])] = 1;
        const std::size_t b = static_cast<std::size_t>(mask.h - 1) * mask.w + x;
        if (labels[b] >= 0) touches[static_cast<std::size_t>(labels[b])] = 1;
    }
    for (int y = 0; y < mask.h; ++y) {
        const std::size_t l = static_cast<std::size_t>(y) * mask.w;
        const std::size_t r = l + static_cast<std::size_t>(mask.w - 1);
        if (labels[l] >= 0) touches[static_cast<std::size_t>(labels[l])] = 1;
        if (labels[r] >= 0) touches[static_cast<std::size_t>(labels[r])] = 1;
    }
    dcpa::SegMask out(mask.h, mask.w);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        out.data[i] = (mask.data[i] || (labels[i] >= 0 && !touches[static_cast<std::size_t>(labels[i])])) ? 1 : 0;
    }
    return out;
}

}  // namespace oracle
