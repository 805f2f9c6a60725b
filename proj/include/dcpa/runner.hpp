#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dcpa/manifest.hpp"
#include "dcpa/metrics.hpp"
#include "dcpa/trainer.hpp"

namespace dcpa {

struct FoldOutcome {
    int fold = 0;
    CheckpointMeta best;
    MetricsReport test_mean;
    std::vector<std::pair<std::string, MetricsReport>> per_image;
    std::filesystem::path checkpoint_path;
    std::vector<std::string> warnings;
};

struct RunOutcome {
    std::filesystem::path output_dir;
    std::vector<FoldOutcome> folds;
};

// Full training run: loads the manifest, writes the resolved run config,
// builds the fold plan, trains each requested fold (streaming log.csv and
// penalties.csv), saves the best checkpoint, and evaluates the fold's test
// images (post-processed masks, overlays and a metrics CSV).
// `only_fold` < 0 runs every fold.
RunOutcome run_training(const RunConfig& cfg, int only_fold = -1);

// Per-image and aggregate metrics rows: id, tp, fp, fn, tn, precision,
// recall, f1, overlap, with a final "mean" row averaging per-image metrics.
void write_metrics_csv(std::ostream& out, const std::vector<std::pair<std::string, MetricsReport>>& rows,
                       const std::vector<ConfusionCounts>& counts);

}  // namespace dcpa
