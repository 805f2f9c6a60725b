#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dcpa/tensor.hpp"

// Forward kernels for the five layer types. These are plain tensor-in,
// tensor-out functions; the autodiff layer wraps them and the inference path
// calls them directly. All reductions run in a fixed serial order.

namespace dcpa {

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// C(MxN) = A(MxK) * B(KxN), all row-major.
template <typename T>
void gemm_rm(const T* a, const T* b, T* c, Eigen::Index m, Eigen::Index k, Eigen::Index n) {
    Eigen::Map<const RowMat<T>> ma(a, m, k);
    Eigen::Map<const RowMat<T>> mb(b, k, n);
    Eigen::Map<RowMat<T>> mc(c, m, n);
    mc.noalias() = ma * mb;
}

// C(MxN) = A(KxM)^T * B(KxN).
template <typename T>
void gemm_rm_at(const T* a, const T* b, T* c, Eigen::Index m, Eigen::Index k, Eigen::Index n) {
    Eigen::Map<const RowMat<T>> ma(a, k, m);
    Eigen::Map<const RowMat<T>> mb(b, k, n);
    Eigen::Map<RowMat<T>> mc(c, m, n);
    mc.noalias() = ma.transpose() * mb;
}

// C(MxN) += A(MxK) * B(NxK)^T.
template <typename T>
void gemm_rm_bt_acc(const T* a, const T* b, T* c, Eigen::Index m, Eigen::Index k, Eigen::Index n) {
    Eigen::Map<const RowMat<T>> ma(a, m, k);
    Eigen::Map<const RowMat<T>> mb(b, n, k);
    Eigen::Map<RowMat<T>> mc(c, m, n);
    mc.noalias() += ma * mb.transpose();
}

// Unrolls kxk patches of a CHW image into a (C*k*k) x (OH*OW) row-major
// matrix; row (c,i,j) holds input[c, y+i, x+j] over output pixels (y,x).
template <typename T>
void im2col(const T* in, int c_in, int h, int w, int k, T* cols) {
    const int oh = h - k + 1;
    const int ow = w - k + 1;
    const std::size_t n = static_cast<std::size_t>(oh) * ow;
    for (int c = 0; c < c_in; ++c) {
        const T* plane = in + static_cast<std::size_t>(c) * h * w;
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                T* row = cols + (static_cast<std::size_t>(c) * k * k + i * k + j) * n;
                for (int y = 0; y < oh; ++y) {
                    const T* src = plane + static_cast<std::size_t>(y + i) * w + j;
                    std::copy(src, src + ow, row + static_cast<std::size_t>(y) * ow);
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-adds the column matrix back into a CHW image.
template <typename T>
void col2im_add(const T* cols, int c_in, int h, int w, int k, T* in_grad) {
    const int oh = h - k + 1;
    const int ow = w - k + 1;
    const std::size_t n = static_cast<std::size_t>(oh) * ow;
    for (int c = 0; c < c_in; ++c) {
        T* plane = in_grad + static_cast<std::size_t>(c) * h * w;
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                const T* row = cols + (static_cast<std::size_t>(c) * k * k + i * k + j) * n;
                for (int y = 0; y < oh; ++y) {
                    T* dst = plane + static_cast<std::size_t>(y + i) * w + j;
                    const T* src = row + static_cast<std::size_t>(y) * ow;
                    for (int x = 0; x < ow; ++x) dst[x] += src[x];
                }
            }
        }
    }
}

}  // namespace detail

// Valid 2-D convolution: input [Cin,H,W] * kernels [Cout,Cin,k,k] + bias
// [Cout] -> [Cout,H-k+1,W-k+1].
template <typename T>
TensorT<T> conv2d_forward(const TensorT<T>& input, const TensorT<T>& kernels, const TensorT<T>& bias) {
    if (input.rank() != 3) throw ShapeError("conv2d: input must be [C,H,W], got " + shape_str(input.shape()));
    if (kernels.rank() != 4) throw ShapeError("conv2d: kernels must be [O,C,k,k], got " + shape_str(kernels.shape()));
    if (kernels.dim(2) != kernels.dim(3)) throw ShapeError("conv2d: kernels must be square, got " + shape_str(kernels.shape()));
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int c_out = kernels.dim(0), k = kernels.dim(2);
    if (kernels.dim(1) != c_in) {
        throw ShapeError("conv2d: kernel channel count " + std::to_string(kernels.dim(1)) +
                         " does not match input channels " + std::to_string(c_in));
    }
    if (bias.rank() != 1 || bias.dim(0) != c_out) {
        throw ShapeError("conv2d: bias must be [" + std::to_string(c_out) + "], got " + shape_str(bias.shape()));
    }
    if (k > h || k > w) {
        throw ShapeError("conv2d: kernel size " + std::to_string(k) + " exceeds input extent " +
                         shape_str(input.shape()));
    }
    const int oh = h - k + 1, ow = w - k + 1;
    const std::size_t n = static_cast<std::size_t>(oh) * ow;
    const std::size_t kk = static_cast<std::size_t>(c_in) * k * k;

    std::vector<T> cols(kk * n);
    detail::im2col(input.data(), c_in, h, w, k, cols.data());

    TensorT<T> out({c_out, oh, ow});
    detail::gemm_rm(kernels.data(), cols.data(), out.data(), c_out, static_cast<Eigen::Index>(kk),
                    static_cast<Eigen::Index>(n));
    for (int o = 0; o < c_out; ++o) {
        T* plane = out.data() + static_cast<std::size_t>(o) * n;
        const T b = bias[static_cast<std::size_t>(o)];
        for (std::size_t i = 0; i < n; ++i) plane[i] += b;
    }
    return out;
}

// 2x2 max-pool with stride 2. If argmax is non-null it receives, per output
// cell, the flat input index of the selected element (first occurrence in
// row-major order on ties).
template <typename T>
TensorT<T> maxpool2_forward(const TensorT<T>& input, std::vector<std::int32_t>* argmax = nullptr) {
    if (input.rank() != 3) throw ShapeError("maxpool2: input must be [C,H,W], got " + shape_str(input.shape()));
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (h % 2 != 0 || w % 2 != 0) {
        throw ShapeError("maxpool2: spatial extents must be even, got " + shape_str(input.shape()));
    }
    const int oh = h / 2, ow = w / 2;
    TensorT<T> out({c_in, oh, ow});
    if (argmax) argmax->resize(out.size());
    const T* in = input.data();
    std::size_t oi = 0;
    for (int c = 0; c < c_in; ++c) {
        const std::size_t base = static_cast<std::size_t>(c) * h * w;
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x, ++oi) {
                const std::size_t i00 = base + static_cast<std::size_t>(2 * y) * w + 2 * x;
                const std::size_t idx[4] = {i00, i00 + 1, i00 + w, i00 + w + 1};
                std::size_t best = idx[0];
                T best_v = in[idx[0]];
                for (int t = 1; t < 4; ++t) {
                    if (in[idx[t]] > best_v) {
                        best_v = in[idx[t]];
                        best = idx[t];
                    }
                }
                out[oi] = best_v;
                if (argmax) (*argmax)[oi] = static_cast<std::int32_t>(best);
            }
        }
    }
    return out;
}

// Transposed convolution with a 2x2 kernel and stride 2: input [Cin,H,W] *
// kernels [Cin,Cout,2,2] + bias [Cout] -> [Cout,2H,2W]. Each input cell
// scatters into a disjoint 2x2 output block.
template <typename T>
TensorT<T> upconv2_forward(const TensorT<T>& input, const TensorT<T>& kernels, const TensorT<T>& bias) {
    if (input.rank() != 3) throw ShapeError("upconv2: input must be [C,H,W], got " + shape_str(input.shape()));
    if (kernels.rank() != 4 || kernels.dim(2) != 2 || kernels.dim(3) != 2) {
        throw ShapeError("upconv2: kernels must be [Cin,Cout,2,2], got " + shape_str(kernels.shape()));
    }
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const int c_out = kernels.dim(1);
    if (kernels.dim(0) != c_in) {
        throw ShapeError("upconv2: kernel input channels " + std::to_string(kernels.dim(0)) +
                         " do not match input channels " + std::to_string(c_in));
    }
    if (bias.rank() != 1 || bias.dim(0) != c_out) {
        throw ShapeError("upconv2: bias must be [" + std::to_string(c_out) + "], got " + shape_str(bias.shape()));
    }
    TensorT<T> out({c_out, 2 * h, 2 * w});
    const int oh = 2 * h, ow = 2 * w;
    for (int o = 0; o < c_out; ++o) {
        T* plane = out.data() + static_cast<std::size_t>(o) * oh * ow;
        const T b = bias[static_cast<std::size_t>(o)];
        for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) plane[i] = b;
    }
    for (int c = 0; c < c_in; ++c) {
        for (int o = 0; o < c_out; ++o) {
            const T k00 = kernels.at4(c, o, 0, 0), k01 = kernels.at4(c, o, 0, 1);
            const T k10 = kernels.at4(c, o, 1, 0), k11 = kernels.at4(c, o, 1, 1);
            for (int y = 0; y < h; ++y) {
                const T* src = input.data() + (static_cast<std::size_t>(c) * h + y) * w;
                T* r0 = out.data() + (static_cast<std::size_t>(o) * oh + 2 * y) * ow;
                T* r1 = r0 + ow;
                for (int x = 0; x < w; ++x) {
                    const T v = src[x];
                    r0[2 * x] += v * k00;
                    r0[2 * x + 1] += v * k01;
                    r1[2 * x] += v * k10;
                    r1[2 * x + 1] += v * k11;
                }
            }
        }
    }
    return out;
}

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& input) {
    TensorT<T> out(input.shape());
    const T* in = input.data();
    T* o = out.data();
    for (std::size_t i = 0; i < input.size(); ++i) o[i] = in[i] > T(0) ? in[i] : T(0);
    return out;
}

// Per-pixel softmax over the two class channels, with max-subtraction for
// stability. The smaller probability is computed as 1 - q_max, which is exact
// in floating point, so the pair sums to exactly 1.
template <typename T>
TensorT<T> softmax2_forward(const TensorT<T>& input) {
    if (input.rank() != 3 || input.dim(0) != 2) {
        throw ShapeError("softmax_channels: expected [2,H,W], got " + shape_str(input.shape()));
    }
    const int h = input.dim(1), w = input.dim(2);
    const std::size_t n = static_cast<std::size_t>(h) * w;
    TensorT<T> out(input.shape());
    const T* z0 = input.data();
    const T* z1 = input.data() + n;
    T* q0 = out.data();
    T* q1 = out.data() + n;
    for (std::size_t i = 0; i < n; ++i) {
        if (z0[i] >= z1[i]) {
            const T e = std::exp(z1[i] - z0[i]);
            const T qmax = T(1) / (T(1) + e);
            q0[i] = qmax;
            q1[i] = T(1) - qmax;
        } else {
            const T e = std::exp(z0[i] - z1[i]);
            const T qmax = T(1) / (T(1) + e);
            q1[i] = qmax;
            q0[i] = T(1) - qmax;
        }
    }
    return out;
}

// Spatially centered crop; a parity mismatch drops the extra row/column from
// the bottom/right (offset = floor((src - target) / 2)).
template <typename T>
TensorT<T> center_crop_forward(const TensorT<T>& input, int target_h, int target_w) {
    if (input.rank() != 3) throw ShapeError("center_crop: input must be [C,H,W], got " + shape_str(input.shape()));
    const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    if (target_h <= 0 || target_w <= 0 || target_h > h || target_w > w) {
        throw ShapeError("center_crop: target " + std::to_string(target_h) + "x" + std::to_string(target_w) +
                         " does not fit inside " + shape_str(input.shape()));
    }
    const int oy = (h - target_h) / 2;
    const int ox = (w - target_w) / 2;
    TensorT<T> out({c_in, target_h, target_w});
    for (int c = 0; c < c_in; ++c) {
        for (int y = 0; y < target_h; ++y) {
            const T* src = input.data() + (static_cast<std::size_t>(c) * h + oy + y) * w + ox;
            std::copy(src, src + target_w, out.data() + (static_cast<std::size_t>(c) * target_h + y) * target_w);
        }
    }
    return out;
}

template <typename T>
TensorT<T> concat_channels_forward(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 3 || b.rank() != 3) throw ShapeError("concat_channels: inputs must be [C,H,W]");
    if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
        throw ShapeError("concat_channels: spatial extents differ, " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
    TensorT<T> out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
}

}  // namespace dcpa
