#pragma once

#include <cstdint>
#include <filesystem>

#include "dcpa/manifest.hpp"

namespace dcpa {

// Generates a fundus-like synthetic dataset: dark surround, circular field of
// view, one bright elliptical disc (3-9% of the field of view) at a random
// position with vessels crossing it, plus sensor noise. The truth mask is the
// ellipse. Images, masks and a manifest are written under `dir`; the disc
// bounding box always fits inside the configured patch.
DatasetManifest synth_dataset(const std::filesystem::path& dir, int count, int image_size, int patch_out,
                              std::uint64_t seed);

}  // namespace dcpa
