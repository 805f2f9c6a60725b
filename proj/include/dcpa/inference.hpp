#pragma once

#include "dcpa/mask.hpp"
#include "dcpa/tensor.hpp"
#include "dcpa/unet.hpp"

namespace dcpa {

// Full-image class probabilities by sliding-window tiling: each tile is
// extracted with its mirror margin and run through the network; pixels
// covered by several (flush edge) tiles receive the arithmetic mean of the
// per-tile probabilities, and every pixel is renormalized to sum to exactly
// 1. Images smaller than one output patch are mirror-extended first and the
// result cropped back. Tiles run in parallel; accumulation is sequential in
// tile order, so the result is independent of the thread count.
Tensor predict_full(const Unet& model, const Tensor& image, int patch_out_w, int patch_out_h, int threads = 0);

// Argmax labeling: disc where the disc-class probability strictly exceeds the
// background's; exact ties go to background.
SegMask binarize(const Tensor& probs);

}  // namespace dcpa
