#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcpa/mask.hpp"
#include "dcpa/rng.hpp"
#include "dcpa/tensor.hpp"

// Disc-centered patch selection for training. Patches are placed at randomly
// shifted disc centers such that every patch fully contains the disc bounding
// box and stays inside the image; four corner patches are appended for
// robustness against border artifacts. At evaluation time the image is tiled
// with a flush sliding window instead.

namespace dcpa {

struct MaskStats {
    std::int64_t positive_count = 0;
    // Inclusive pixel bounds and real-valued center of mass; meaningful only
    // when positive_count > 0.
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
    double cx = 0.0, cy = 0.0;

    bool empty() const { return positive_count == 0; }
    int bbox_w() const { return x1 - x0 + 1; }
    int bbox_h() const { return y1 - y0 + 1; }
};

enum class SamplerMode {
    disc_centered,  // DCPA
    uniform,        // ablation baseline: uniform random positions
};

struct SamplerConfig {
    double ratio = 0.5;              // r: fraction of the tiling count P
    std::int64_t min_positive = 500; // T: positive-pixel floor per patch
    int patch_w = 388;               // output rectangle size
    int patch_h = 388;
    int margin = 92;                 // context per side, from the model geometry
    bool include_corners = true;
    SamplerMode mode = SamplerMode::disc_centered;

    void validate() const {
        if (!(ratio > 0.0 && ratio <= 1.0)) {
            throw ConfigError("sampler: ratio must be in (0,1], got " + std::to_string(ratio));
        }
        if (min_positive < 0) throw ConfigError("sampler: min_positive must be >= 0");
        if (patch_w < 1 || patch_h < 1) throw ConfigError("sampler: patch size must be positive");
        if (margin < 0) throw ConfigError("sampler: margin must be >= 0");
    }
};

// Output rectangle of one patch in image coordinates; the network input
// rectangle is this expanded by the margin on every side (out-of-bounds
// pixels are resolved by mirror extension at extraction time).
struct PatchSpec {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool operator==(const PatchSpec&) const = default;
};

struct SampleResult {
    std::vector<PatchSpec> specs;
    std::vector<std::string> warnings;
    bool used_fallback = false;  // bbox exceeded the patch size
};

MaskStats mask_stats(const SegMask& mask);

// ceil(r*P) disc-containing patches at uniformly drawn feasible shifts.
// Falls back to a single clamped zero-shift patch (with a warning) when the
// disc bounding box exceeds the patch size.
SampleResult sample_disc_patches(const SegMask& mask, const SamplerConfig& cfg, int patch_population, Rng& rng);

// Position-uniform baseline with the same patch count as the DCPA recipe
// would produce (including the corner allotment).
std::vector<PatchSpec> sample_uniform_patches(int image_w, int image_h, const SamplerConfig& cfg, int count,
                                              Rng& rng);

// One patch flush against each image corner; duplicates collapse when the
// image is exactly patch-sized.
std::vector<PatchSpec> corner_patches(int image_w, int image_h, const SamplerConfig& cfg);

// Non-overlapping grid stepping by the patch size, with the final row/column
// shifted to lie flush with the border. Defines the patch population P.
std::vector<PatchSpec> tiling(int image_w, int image_h, int patch_w, int patch_h);

// Reflected index without edge duplication (-1 -> 1, n -> n-2), applied
// periodically for arbitrarily large overshoot.
int reflect_index(int i, int n);

// Copies the patch's input rectangle (output rectangle grown by margin per
// side) out of a [C,H,W] image, mirroring at the borders.
Tensor extract(const Tensor& image, const PatchSpec& spec, int margin);

// Plain crop of the output rectangle from the ground-truth mask.
SegMask extract_mask(const SegMask& mask, const PatchSpec& spec);

}  // namespace dcpa
