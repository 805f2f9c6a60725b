#pragma once

#include <filesystem>

#include "dcpa/mask.hpp"
#include "dcpa/tensor.hpp"

namespace dcpa {

// Loads an 8-bit PNG as [3,H,W] reals in [0,1]; gray/palette/alpha inputs are
// expanded to RGB.
Tensor load_image_rgb(const std::filesystem::path& path);

// Loads a PNG as a binary mask: any nonzero sample = disc.
SegMask load_mask(const std::filesystem::path& path);

// Writes a single-channel PNG with disc = 255, background = 0.
void save_mask(const SegMask& mask, const std::filesystem::path& path);

// Writes a [3,H,W] tensor of [0,1] reals as an 8-bit RGB PNG.
void save_image_rgb(const Tensor& image, const std::filesystem::path& path);

// Classification overlay in the standard legend: TP white, FP green, FN red,
// TN black. `image` fixes the expected size.
void save_overlay(const Tensor& image, const SegMask& pred, const SegMask& truth,
                  const std::filesystem::path& path);

// Raw disc-class probability map (float32), for lossless round-trips.
void save_prob_map(const Tensor& probs2hw, const std::filesystem::path& path);
Tensor load_prob_map(const std::filesystem::path& path);  // returns [H,W] q1

}  // namespace dcpa
