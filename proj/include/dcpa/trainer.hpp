#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dcpa/checkpoint.hpp"
#include "dcpa/manifest.hpp"
#include "dcpa/mask.hpp"
#include "dcpa/rng.hpp"
#include "dcpa/sampler.hpp"
#include "dcpa/tensor.hpp"
#include "dcpa/trainer_config.hpp"
#include "dcpa/unet.hpp"

namespace dcpa {

struct FoldSplit {
    std::vector<int> train;  // indices into Dataset::items
    std::vector<int> val;
    std::vector<int> test;
};

struct FoldPlan {
    std::vector<FoldSplit> folds;
};

// Cross-validation plan: shuffled ids split into `folds` near-equal test
// groups, the remainder of each fold carved 70/30 into train/validation.
// When the dataset ships with fixed train/test tags, a single fold is built
// and only the validation carve-out is random.
FoldPlan make_folds(const std::vector<SplitTag>& tags, const TrainConfig& cfg, Rng& rng);

// Flips the patch and its mask identically along the requested axes.
void flip_patch(Tensor& patch, SegMask& mask, bool flip_v, bool flip_h);

// Independent vertical and horizontal coin-flips, applied identically to the
// patch and its mask.
std::pair<Tensor, SegMask> augment_flip(Tensor patch, SegMask mask, Rng& rng);

struct EpochLog {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_precision = 0.0;
    double val_recall = 0.0;
    double val_f1 = 0.0;
    double val_overlap = 0.0;
    std::vector<double> penalties;  // one per mini-batch, in draw order
};

struct TrainSettings {
    ModelConfig model;
    TrainConfig train;
    LossConfig loss;
    double sampler_ratio = 0.5;
    std::int64_t sampler_min_positive = 500;
    bool sampler_include_corners = true;
    SamplerMode sampler_mode = SamplerMode::disc_centered;
};

struct TrainResult {
    Unet model;  // checkpoint with the best validation F1 (earliest on ties)
    CheckpointMeta meta;
    std::vector<EpochLog> logs;
    std::vector<std::string> warnings;
};

// Appends one CSV row per epoch: epoch, loss, val_precision, val_recall,
// val_f1, val_overlap (header written first).
void write_epoch_csv_header(std::ostream& out);
void write_epoch_csv_row(std::ostream& out, const EpochLog& log);

// Trains one fold per the protocol: per-epoch patch re-sampling (DCPA or the
// uniform baseline), flip augmentation, mini-batches with a per-batch penalty
// draw when stochastic, ADAM updates, and per-epoch validation via
// sliding-window inference with post-processing.
TrainResult train_fold(const Dataset& data, const FoldSplit& fold, const TrainSettings& settings,
                       const std::function<void(const EpochLog&)>& on_epoch = nullptr);

}  // namespace dcpa
