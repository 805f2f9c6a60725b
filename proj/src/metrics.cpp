#include "dcpa/metrics.hpp"

namespace dcpa {

ConfusionCounts confusion(const SegMask& pred, const SegMask& truth) {
    if (!same_size(pred, truth)) {
        throw ShapeError("confusion: size mismatch, " + std::to_string(pred.w) + "x" + std::to_string(pred.h) +
                         " vs " + std::to_string(truth.w) + "x" + std::to_string(truth.h));
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred.data[i] != 0;
        const bool t = truth.data[i] != 0;
        if (p && t) {
            ++c.tp;
        } else if (p && !t) {
            ++c.fp;
        } else if (!p && t) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

MetricsReport metrics(const ConfusionCounts& c) {
    MetricsReport r;
    auto ratio = [&](std::int64_t num, std::int64_t den) {
        if (den == 0) {
            r.degenerate = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    r.precision = ratio(c.tp, c.tp + c.fp);
    r.recall = ratio(c.tp, c.tp + c.fn);
    if (r.precision + r.recall == 0.0) {
        r.degenerate = true;
        r.f1 = 0.0;
    } else {
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    }
    r.overlap = ratio(c.tp, c.tp + c.fn + c.fp);
    return r;
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
    MetricsReport mean;
    if (reports.empty()) {
        mean.degenerate = true;
        return mean;
    }
    for (const auto& r : reports) {
        mean.precision += r.precision;
        mean.recall += r.recall;
        mean.f1 += r.f1;
        mean.overlap += r.overlap;
        mean.degenerate = mean.degenerate || r.degenerate;
    }
    const double n = static_cast<double>(reports.size());
    mean.precision /= n;
    mean.recall /= n;
    mean.f1 /= n;
    mean.overlap /= n;
    return mean;
}

}  // namespace dcpa
