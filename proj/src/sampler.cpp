#include "dcpa/sampler.hpp"

#include <algorithm>
#include <cmath>

namespace dcpa {

MaskStats mask_stats(const SegMask& mask) {
    MaskStats s;
    double sx = 0.0, sy = 0.0;
    int x0 = mask.w, y0 = mask.h, x1 = -1, y1 = -1;
    for (int y = 0; y < mask.h; ++y) {
        const std::uint8_t* row = mask.data.data() + static_cast<std::size_t>(y) * mask.w;
        for (int x = 0; x < mask.w; ++x) {
            if (!row[x]) continue;
            ++s.positive_count;
            sx += x;
            sy += y;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    if (s.positive_count > 0) {
        s.x0 = x0;
        s.y0 = y0;
        s.x1 = x1;
        s.y1 = y1;
        s.cx = sx / static_cast<double>(s.positive_count);
        s.cy = sy / static_cast<double>(s.positive_count);
    }
    return s;
}

namespace {

int clamp_int(int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); }

// Feasible top-left interval along one axis: the patch must contain the disc
// bounds [b0, b1] and stay inside [0, image_extent).
struct Interval {
    int lo;
    int hi;
    bool empty() const { return hi < lo; }
};

Interval feasible_topleft(int b0, int b1, int patch, int image_extent) {
    return {std::max(0, b1 - patch + 1), std::min(b0, image_extent - patch)};
}

}  // namespace

SampleResult sample_disc_patches(const SegMask& mask, const SamplerConfig& cfg, int patch_population, Rng& rng) {
    cfg.validate();
    MaskStats stats = mask_stats(mask);
    if (stats.empty()) throw DataError("sample_disc_patches: mask has no positive pixels");
    if (patch_population < 1) throw ConfigError("sample_disc_patches: patch population must be >= 1");
    if (mask.w < cfg.patch_w || mask.h < cfg.patch_h) {
        throw ShapeError("sample_disc_patches: image " + std::to_string(mask.w) + "x" + std::to_string(mask.h) +
                         " is smaller than the patch " + std::to_string(cfg.patch_w) + "x" +
                         std::to_string(cfg.patch_h));
    }

    SampleResult res;
    const int count = static_cast<int>(
        std::ceil(cfg.ratio * static_cast<double>(patch_population) - 1e-12));

    // Integer disc center; the zero-shift patch is centered on it.
    const int cxi = static_cast<int>(std::lround(stats.cx));
    const int cyi = static_cast<int>(std::lround(stats.cy));

    if (stats.bbox_w() > cfg.patch_w || stats.bbox_h() > cfg.patch_h) {
        PatchSpec p;
        p.w = cfg.patch_w;
        p.h = cfg.patch_h;
        p.x = clamp_int(cxi - cfg.patch_w / 2, 0, mask.w - cfg.patch_w);
        p.y = clamp_int(cyi - cfg.patch_h / 2, 0, mask.h - cfg.patch_h);
        res.specs.push_back(p);
        res.used_fallback = true;
        res.warnings.push_back("disc bounding box " + std::to_string(stats.bbox_w()) + "x" +
                               std::to_string(stats.bbox_h()) + " exceeds patch size; using single clamped patch");
        return res;
    }

    const Interval fx = feasible_topleft(stats.x0, stats.x1, cfg.patch_w, mask.w);
    const Interval fy = feasible_topleft(stats.y0, stats.y1, cfg.patch_h, mask.h);
    // Containment implies the patch covers every positive pixel, so the floor
    // is decided by the mask itself.
    if (stats.positive_count < cfg.min_positive) {
        res.warnings.push_back("mask has " + std::to_string(stats.positive_count) +
                               " positive pixels, below the floor T=" + std::to_string(cfg.min_positive));
    }
    res.specs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        PatchSpec p;
        p.w = cfg.patch_w;
        p.h = cfg.patch_h;
        p.x = static_cast<int>(rng.next_int(fx.lo, fx.hi));
        p.y = static_cast<int>(rng.next_int(fy.lo, fy.hi));
        res.specs.push_back(p);
    }
    return res;
}

std::vector<PatchSpec> sample_uniform_patches(int image_w, int image_h, const SamplerConfig& cfg, int count,
                                              Rng& rng) {
    cfg.validate();
    if (image_w < cfg.patch_w || image_h < cfg.patch_h) {
        throw ShapeError("sample_uniform_patches: image smaller than patch");
    }
    std::vector<PatchSpec> specs;
    specs.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        PatchSpec p;
        p.w = cfg.patch_w;
        p.h = cfg.patch_h;
        p.x = static_cast<int>(rng.next_int(0, image_w - cfg.patch_w));
        p.y = static_cast<int>(rng.next_int(0, image_h - cfg.patch_h));
        specs.push_back(p);
    }
    return specs;
}

std::vector<PatchSpec> corner_patches(int image_w, int image_h, const SamplerConfig& cfg) {
    cfg.validate();
    if (image_w < cfg.patch_w || image_h < cfg.patch_h) {
        throw ShapeError("corner_patches: image " + std::to_string(image_w) + "x" + std::to_string(image_h) +
                         " is smaller than the patch");
    }
    const int rx = image_w - cfg.patch_w;
    const int by = image_h - cfg.patch_h;
    std::vector<PatchSpec> specs = {
        {0, 0, cfg.patch_w, cfg.patch_h},
        {rx, 0, cfg.patch_w, cfg.patch_h},
        {0, by, cfg.patch_w, cfg.patch_h},
        {rx, by, cfg.patch_w, cfg.patch_h},
    };
    std::vector<PatchSpec> unique;
    for (const auto& s : specs) {
        if (std::find(unique.begin(), unique.end(), s) == unique.end()) unique.push_back(s);
    }
    return unique;
}

std::vector<PatchSpec> tiling(int image_w, int image_h, int patch_w, int patch_h) {
    if (patch_w < 1 || patch_h < 1) throw ConfigError("tiling: patch size must be positive");
    std::vector<PatchSpec> tiles;
    if (image_w <= patch_w && image_h <= patch_h) {
        tiles.push_back({0, 0, std::min(patch_w, image_w), std::min(patch_h, image_h)});
        return tiles;
    }
    const int nx = std::max(1, (image_w + patch_w - 1) / patch_w);
    const int ny = std::max(1, (image_h + patch_h - 1) / patch_h);
    const int w = std::min(patch_w, image_w);
    const int h = std::min(patch_h, image_h);
    for (int ty = 0; ty < ny; ++ty) {
        const int y = std::min(ty * patch_h, image_h - h);
        for (int tx = 0; tx < nx; ++tx) {
            const int x = std::min(tx * patch_w, image_w - w);
            tiles.push_back({x, y, w, h});
        }
    }
    return tiles;
}

int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    int j = i % period;
    if (j < 0) j += period;
    return j < n ? j : period - j;
}

Tensor extract(const Tensor& image, const PatchSpec& spec, int margin) {
    if (image.rank() != 3) throw ShapeError("extract: image must be [C,H,W]");
    const int c_in = image.dim(0), h = image.dim(1), w = image.dim(2);
    if (spec.x < 0 || spec.y < 0 || spec.x + spec.w > w || spec.y + spec.h > h) {
        throw ShapeError("extract: output rectangle lies outside the image");
    }
    const int oh = spec.h + 2 * margin;
    const int ow = spec.w + 2 * margin;
    Tensor out({c_in, oh, ow});

    std::vector<int> col_map(static_cast<std::size_t>(ow));
    for (int x = 0; x < ow; ++x) col_map[static_cast<std::size_t>(x)] = reflect_index(spec.x - margin + x, w);
    for (int c = 0; c < c_in; ++c) {
        const float* plane = image.data() + static_cast<std::size_t>(c) * h * w;
        for (int y = 0; y < oh; ++y) {
            const int sy = reflect_index(spec.y - margin + y, h);
            const float* src = plane + static_cast<std::size_t>(sy) * w;
            float* dst = out.data() + (static_cast<std::size_t>(c) * oh + y) * ow;
            const int interior_lo = std::max(0, margin - spec.x);
            const int interior_hi = std::min(ow, w - (spec.x - margin));
            for (int x = 0; x < interior_lo; ++x) dst[x] = src[col_map[static_cast<std::size_t>(x)]];
            if (interior_hi > interior_lo) {
                std::copy(src + (spec.x - margin + interior_lo), src + (spec.x - margin + interior_hi),
                          dst + interior_lo);
            }
            for (int x = std::max(interior_hi, interior_lo); x < ow; ++x) {
                dst[x] = src[col_map[static_cast<std::size_t>(x)]];
            }
        }
    }
    return out;
}

SegMask extract_mask(const SegMask& mask, const PatchSpec& spec) {
    if (spec.x < 0 || spec.y < 0 || spec.x + spec.w > mask.w || spec.y + spec.h > mask.h) {
        throw ShapeError("extract_mask: output rectangle lies outside the mask");
    }
    SegMask out(spec.h, spec.w);
    for (int y = 0; y < spec.h; ++y) {
        const std::uint8_t* src = mask.data.data() + static_cast<std::size_t>(spec.y + y) * mask.w + spec.x;
        std::copy(src, src + spec.w, out.data.data() + static_cast<std::size_t>(y) * spec.w);
    }
    return out;
}

}  // namespace dcpa
