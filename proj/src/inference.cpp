#include "dcpa/inference.hpp"

#include <algorithm>
#include <vector>

#include "dcpa/parallel.hpp"
#include "dcpa/sampler.hpp"

namespace dcpa {

namespace {

Tensor mirror_extend(const Tensor& image, int new_h, int new_w) {
    const int c_in = image.dim(0), h = image.dim(1), w = image.dim(2);
    Tensor out({c_in, new_h, new_w});
    for (int c = 0; c < c_in; ++c) {
        for (int y = 0; y < new_h; ++y) {
            const int sy = reflect_index(y, h);
            const float* src = image.data() + (static_cast<std::size_t>(c) * h + sy) * w;
            float* dst = out.data() + (static_cast<std::size_t>(c) * new_h + y) * new_w;
            for (int x = 0; x < new_w; ++x) dst[x] = src[reflect_index(x, w)];
        }
    }
    return out;
}

}  // namespace

Tensor predict_full(const Unet& model, const Tensor& image, int patch_out_w, int patch_out_h, int threads) {
    if (image.rank() != 3 || image.dim(0) != model.config().in_channels) {
        throw ShapeError("predict_full: expected [" + std::to_string(model.config().in_channels) +
                         ",H,W] image, got " + shape_str(image.shape()));
    }
    const GeometrySpec geom = geometry_for_output(model.config().depth, patch_out_w, patch_out_h);
    const int h = image.dim(1), w = image.dim(2);

    const int run_h = std::max(h, patch_out_h);
    const int run_w = std::max(w, patch_out_w);
    Tensor extended_storage;
    const Tensor* img = &image;
    if (run_h != h || run_w != w) {
        extended_storage = mirror_extend(image, run_h, run_w);
        img = &extended_storage;
    }

    const std::vector<PatchSpec> tiles = tiling(run_w, run_h, patch_out_w, patch_out_h);
    std::vector<Tensor> tile_probs(tiles.size());
    parallel_for(static_cast<int>(tiles.size()), threads, [&](int t) {
        const Tensor input = extract(*img, tiles[static_cast<std::size_t>(t)], geom.margin);
        tile_probs[static_cast<std::size_t>(t)] = model.forward(input);
    });

    const std::size_t plane = static_cast<std::size_t>(run_h) * run_w;
    std::vector<double> sum0(plane, 0.0), sum1(plane, 0.0);
    std::vector<std::int32_t> hits(plane, 0);
    for (std::size_t t = 0; t < tiles.size(); ++t) {
        const PatchSpec& spec = tiles[t];
        const Tensor& p = tile_probs[t];
        const std::size_t tplane = static_cast<std::size_t>(spec.h) * spec.w;
        for (int y = 0; y < spec.h; ++y) {
            const std::size_t dst = static_cast<std::size_t>(spec.y + y) * run_w + spec.x;
            const std::size_t src = static_cast<std::size_t>(y) * spec.w;
            for (int x = 0; x < spec.w; ++x) {
                sum0[dst + x] += static_cast<double>(p[src + x]);
                sum1[dst + x] += static_cast<double>(p[tplane + src + x]);
                ++hits[dst + x];
            }
        }
    }

    Tensor out({2, h, w});
    const std::size_t out_plane = static_cast<std::size_t>(h) * w;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t src = static_cast<std::size_t>(y) * run_w + x;
            const std::size_t dst = static_cast<std::size_t>(y) * w + x;
            const double n = static_cast<double>(hits[src]);
            const double m0 = sum0[src] / n;
            const double m1 = sum1[src] / n;
            const double s = m0 + m1;
            float q0, q1;
            if (m0 >= m1) {
                q0 = static_cast<float>(m0 / s);
                q1 = 1.0f - q0;
            } else {
                q1 = static_cast<float>(m1 / s);
                q0 = 1.0f - q1;
            }
            out[dst] = q0;
            out[out_plane + dst] = q1;
        }
    }
    return out;
}

SegMask binarize(const Tensor& probs) {
    if (probs.rank() != 3 || probs.dim(0) != 2) {
        throw ShapeError("binarize: expected [2,H,W], got " + shape_str(probs.shape()));
    }
    const int h = probs.dim(1), w = probs.dim(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    SegMask mask(h, w);
    for (std::size_t i = 0; i < plane; ++i) {
        mask.data[i] = probs[plane + i] > probs[i] ? 1 : 0;
    }
    return mask;
}

}  // namespace dcpa
