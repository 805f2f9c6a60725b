#pragma once

#include <cstdint>
#include <vector>

#include "dcpa/mask.hpp"

namespace dcpa {

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }
};

struct MetricsReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // Intersection over union, TP/(TP+FN+FP); never exceeds f1.
    double overlap = 0.0;
    // Set when any ratio was 0/0 and reported as 0.
    bool degenerate = false;
};

ConfusionCounts confusion(const SegMask& pred, const SegMask& truth);
MetricsReport metrics(const ConfusionCounts& c);

// Mean of per-image reports (the per-dataset aggregation used in summaries).
MetricsReport mean_report(const std::vector<MetricsReport>& reports);

}  // namespace dcpa
