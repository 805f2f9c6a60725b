#pragma once

#include <cstdint>
#include <filesystem>

#include "dcpa/unet.hpp"

namespace dcpa {

struct CheckpointMeta {
    std::uint32_t epoch = 0;
    float val_f1 = 0.0f;
};

// Binary checkpoint: magic "DCPA", one version byte, a length-prefixed config
// record (depth, base width, input channels, classes, seed, epoch, val F1),
// then one length-prefixed entry per parameter (name, rank, extents, raw
// little-endian 32-bit values). Round-trips are bit-exact.
void save_checkpoint(const Unet& model, const CheckpointMeta& meta, const std::filesystem::path& path);
Unet load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace dcpa
