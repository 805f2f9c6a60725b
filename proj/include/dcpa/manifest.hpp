#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dcpa/losses.hpp"
#include "dcpa/mask.hpp"
#include "dcpa/sampler.hpp"
#include "dcpa/tensor.hpp"
#include "dcpa/trainer_config.hpp"
#include "dcpa/unet.hpp"

namespace dcpa {

enum class SplitTag { unsplit, train, test };

struct ManifestRecord {
    std::string id;
    std::filesystem::path image;  // resolved against the manifest directory
    std::filesystem::path mask;   // empty when no ground truth ships
    SplitTag split = SplitTag::unsplit;

    bool has_mask() const { return !mask.empty(); }
};

struct DatasetManifest {
    std::string name;
    // Patch geometry; the input size is optional and, when present, is
    // cross-checked against the model geometry at run time.
    int patch_out_w = 388;
    int patch_out_h = 388;
    int patch_in_w = 0;
    int patch_in_h = 0;
    std::vector<ManifestRecord> records;
    std::filesystem::path base_dir;
};

// JSON manifest with a versioned `format` key. Validates unique ids and that
// every referenced file exists.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct DatasetItem {
    std::string id;
    Tensor image;  // [3,H,W] in [0,1]
    SegMask mask;
    bool has_mask = false;
    SplitTag split = SplitTag::unsplit;
};

struct Dataset {
    std::vector<DatasetItem> items;
    int patch_out_w = 0;
    int patch_out_h = 0;
};

// Loads every record's rasters; image/mask dimension mismatches are reported
// per record. `require_masks` makes a missing mask an error (training).
Dataset load_dataset(const DatasetManifest& manifest, bool require_masks);

// Full run description: what to train on, with which model, loss, sampler and
// schedule. Mirrors the JSON run-config file.
struct RunConfig {
    std::filesystem::path manifest_path;
    std::filesystem::path output_dir;
    ModelConfig model;
    TrainConfig train;
    LossConfig loss;
    double sampler_ratio = 0.5;
    std::int64_t sampler_min_positive = 500;
    bool sampler_include_corners = true;
    SamplerMode sampler_mode = SamplerMode::disc_centered;

    void validate() const;
};

// Reads a run config; unset keys get defaults, and an unset train seed is
// drawn from the system entropy source (the resolved dump pins it).
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

}  // namespace dcpa
