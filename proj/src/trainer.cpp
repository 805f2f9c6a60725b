#include "dcpa/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "dcpa/inference.hpp"
#include "dcpa/losses.hpp"
#include "dcpa/metrics.hpp"
#include "dcpa/morphology.hpp"
#include "dcpa/parallel.hpp"

namespace dcpa {

namespace {

std::vector<int> shuffled(std::vector<int> v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[static_cast<std::size_t>(rng.next_index(static_cast<std::int64_t>(i)))]);
    }
    return v;
}

// Near-equal chunk sizes, the first (n % k) chunks one larger.
std::vector<int> chunk_sizes(int n, int k) {
    std::vector<int> sizes(static_cast<std::size_t>(k), n / k);
    for (int i = 0; i < n % k; ++i) ++sizes[static_cast<std::size_t>(i)];
    return sizes;
}

void carve_validation(std::vector<int> pool, double fraction, Rng& rng, std::vector<int>* train,
                      std::vector<int>* val) {
    pool = shuffled(std::move(pool), rng);
    int n_val = static_cast<int>(std::lround(fraction * static_cast<double>(pool.size())));
    if (pool.size() >= 2) n_val = std::clamp(n_val, 1, static_cast<int>(pool.size()) - 1);
    val->assign(pool.begin(), pool.begin() + n_val);
    train->assign(pool.begin() + n_val, pool.end());
    std::sort(train->begin(), train->end());
    std::sort(val->begin(), val->end());
}

}  // namespace

FoldPlan make_folds(const std::vector<SplitTag>& tags, const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    const int n = static_cast<int>(tags.size());
    FoldPlan plan;

    bool any_tagged = false;
    for (SplitTag t : tags) any_tagged = any_tagged || t != SplitTag::unsplit;
    if (any_tagged) {
        FoldSplit fold;
        std::vector<int> pool;
        for (int i = 0; i < n; ++i) {
            if (tags[static_cast<std::size_t>(i)] == SplitTag::test) {
                fold.test.push_back(i);
            } else {
                pool.push_back(i);
            }
        }
        if (pool.empty()) throw DataError("make_folds: fixed split has no training images");
        carve_validation(std::move(pool), cfg.validation_fraction, rng, &fold.train, &fold.val);
        plan.folds.push_back(std::move(fold));
        return plan;
    }

    if (n < cfg.folds) {
        throw DataError("make_folds: " + std::to_string(n) + " images cannot fill " + std::to_string(cfg.folds) +
                        " folds");
    }
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = i;
    ids = shuffled(std::move(ids), rng);
    const std::vector<int> sizes = chunk_sizes(n, cfg.folds);
    std::size_t offset = 0;
    for (int f = 0; f < cfg.folds; ++f) {
        FoldSplit fold;
        fold.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(offset),
                         ids.begin() + static_cast<std::ptrdiff_t>(offset + sizes[static_cast<std::size_t>(f)]));
        offset += static_cast<std::size_t>(sizes[static_cast<std::size_t>(f)]);
        std::vector<int> pool;
        for (int i : ids) {
            if (std::find(fold.test.begin(), fold.test.end(), i) == fold.test.end()) pool.push_back(i);
        }
        std::sort(fold.test.begin(), fold.test.end());
        carve_validation(std::move(pool), cfg.validation_fraction, rng, &fold.train, &fold.val);
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

void flip_patch(Tensor& patch, SegMask& mask, bool flip_v, bool flip_h) {
    if (patch.rank() != 3) throw ShapeError("flip_patch: patch must be [C,H,W]");
    const int c_in = patch.dim(0), h = patch.dim(1), w = patch.dim(2);
    if (flip_v) {
        for (int c = 0; c < c_in; ++c) {
            float* plane = patch.data() + static_cast<std::size_t>(c) * h * w;
            for (int y = 0; y < h / 2; ++y) {
                std::swap_ranges(plane + static_cast<std::size_t>(y) * w, plane + static_cast<std::size_t>(y + 1) * w,
                                 plane + static_cast<std::size_t>(h - 1 - y) * w);
            }
        }
        for (int y = 0; y < mask.h / 2; ++y) {
            std::swap_ranges(mask.data.begin() + static_cast<std::ptrdiff_t>(y) * mask.w,
                             mask.data.begin() + static_cast<std::ptrdiff_t>(y + 1) * mask.w,
                             mask.data.begin() + static_cast<std::ptrdiff_t>(mask.h - 1 - y) * mask.w);
        }
    }
    if (flip_h) {
        for (int c = 0; c < c_in; ++c) {
            for (int y = 0; y < h; ++y) {
                float* row = patch.data() + (static_cast<std::size_t>(c) * h + y) * w;
                std::reverse(row, row + w);
            }
        }
        for (int y = 0; y < mask.h; ++y) {
            auto row = mask.data.begin() + static_cast<std::ptrdiff_t>(y) * mask.w;
            std::reverse(row, row + mask.w);
        }
    }
}

std::pair<Tensor, SegMask> augment_flip(Tensor patch, SegMask mask, Rng& rng) {
    const bool flip_v = rng.next_bool();
    const bool flip_h = rng.next_bool();
    flip_patch(patch, mask, flip_v, flip_h);
    return {std::move(patch), std::move(mask)};
}

void write_epoch_csv_header(std::ostream& out) {
    out << "epoch,loss,val_precision,val_recall,val_f1,val_overlap\n";
}

namespace {

std::string fmt_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

void write_epoch_csv_row(std::ostream& out, const EpochLog& log) {
    out << log.epoch << ',' << fmt_g9(log.train_loss) << ',' << fmt_g9(log.val_precision) << ','
        << fmt_g9(log.val_recall) << ',' << fmt_g9(log.val_f1) << ',' << fmt_g9(log.val_overlap) << '\n';
}

namespace {

struct PatchEntry {
    int item;  // dataset index
    PatchSpec spec;
    bool corner = false;
    bool flip_v = false;
    bool flip_h = false;
};

void audit_fold(const FoldSplit& fold) {
    auto overlaps = [](const std::vector<int>& a, const std::vector<int>& b) {
        for (int i : a) {
            if (std::find(b.begin(), b.end(), i) != b.end()) return true;
        }
        return false;
    };
    if (overlaps(fold.train, fold.test) || overlaps(fold.val, fold.test) || overlaps(fold.train, fold.val)) {
        throw DataError("train_fold: fold splits overlap");
    }
    if (fold.train.empty()) throw DataError("train_fold: empty training split");
}

}  // namespace

TrainResult train_fold(const Dataset& data, const FoldSplit& fold, const TrainSettings& settings,
                       const std::function<void(const EpochLog&)>& on_epoch) {
    settings.model.validate();
    settings.train.validate();
    settings.loss.validate();
    audit_fold(fold);

    const GeometrySpec geom = geometry_for_output(settings.model.depth, data.patch_out_w, data.patch_out_h);
    SamplerConfig sampler;
    sampler.ratio = settings.sampler_ratio;
    sampler.min_positive = settings.sampler_min_positive;
    sampler.patch_w = data.patch_out_w;
    sampler.patch_h = data.patch_out_h;
    sampler.margin = geom.margin;
    sampler.include_corners = settings.sampler_include_corners;
    sampler.mode = settings.sampler_mode;
    sampler.validate();

    for (int idx : fold.train) {
        const auto& item = data.items[static_cast<std::size_t>(idx)];
        if (!item.has_mask) throw DataError("train_fold: training image '" + item.id + "' has no mask");
    }

    TrainResult result{Unet(settings.model), CheckpointMeta{}, {}, {}};
    Unet& model = result.model;
    const std::uint64_t seed = settings.train.seed;
    const int threads = settings.train.threads;

    std::vector<Tensor*> param_ptrs;
    std::vector<std::string> param_names;
    std::vector<std::size_t> param_sizes;
    for (auto& p : model.params()) {
        param_ptrs.push_back(&p.tensor);
        param_names.push_back(p.name);
        param_sizes.push_back(p.tensor.size());
    }
    AdamState adam = AdamState::init(param_sizes);
    AdamConfig adam_cfg;
    adam_cfg.lr = settings.train.lr;

    double best_f1 = -1.0;
    std::vector<NamedParamT<float>> best_params = model.params();
    CheckpointMeta best_meta;

    for (int epoch = 1; epoch <= settings.train.epochs; ++epoch) {
        // Patch plan: re-sampled every epoch, one RNG stream per image.
        std::vector<PatchEntry> entries;
        for (std::size_t k = 0; k < fold.train.size(); ++k) {
            const int idx = fold.train[k];
            const auto& item = data.items[static_cast<std::size_t>(idx)];
            Rng img_rng(seed_stream({seed, 0xA11CE, static_cast<std::uint64_t>(epoch),
                                     static_cast<std::uint64_t>(idx)}));
            const int population =
                static_cast<int>(tiling(item.image.dim(2), item.image.dim(1), sampler.patch_w, sampler.patch_h).size());
            const auto corners = sampler.include_corners
                                     ? corner_patches(item.image.dim(2), item.image.dim(1), sampler)
                                     : std::vector<PatchSpec>{};
            if (sampler.mode == SamplerMode::disc_centered) {
                SampleResult sr = sample_disc_patches(item.mask, sampler, population, img_rng);
                if (epoch == 1) {
                    for (const auto& w : sr.warnings) result.warnings.push_back("image " + item.id + ": " + w);
                }
                const MaskStats stats = mask_stats(item.mask);
                for (const auto& spec : sr.specs) {
                    // Delegated sampler invariant, audited per epoch.
                    const bool contains = spec.x <= stats.x0 && spec.y <= stats.y0 &&
                                          spec.x + spec.w > stats.x1 && spec.y + spec.h > stats.y1;
                    if (!contains && !sr.used_fallback) {
                        throw DataError("train_fold: sampled patch does not contain the disc (image " + item.id +
                                        ")");
                    }
                    entries.push_back({idx, spec, false, false, false});
                }
                for (const auto& spec : corners) entries.push_back({idx, spec, true, false, false});
            } else {
                const int count = static_cast<int>(std::ceil(sampler.ratio * population - 1e-12)) +
                                  static_cast<int>(corners.size());
                for (const auto& spec :
                     sample_uniform_patches(item.image.dim(2), item.image.dim(1), sampler, count, img_rng)) {
                    entries.push_back({idx, spec, false, false, false});
                }
            }
        }

        Rng epoch_rng(seed_stream({seed, 0xEB0C, static_cast<std::uint64_t>(epoch)}));
        // Shuffle, then fix each patch's flips up front.
        {
            std::vector<int> order(entries.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            order = shuffled(std::move(order), epoch_rng);
            std::vector<PatchEntry> tmp;
            tmp.reserve(entries.size());
            for (int i : order) tmp.push_back(entries[static_cast<std::size_t>(i)]);
            entries = std::move(tmp);
        }
        for (auto& e : entries) {
            e.flip_v = epoch_rng.next_bool();
            e.flip_h = epoch_rng.next_bool();
        }

        EpochLog log;
        log.epoch = epoch;
        double loss_sum = 0.0;
        std::size_t sample_count = 0;

        const std::size_t n_entries = entries.size();
        const int batch_size = settings.train.batch_size;
        for (std::size_t start = 0; start < n_entries; start += static_cast<std::size_t>(batch_size)) {
            const int n = static_cast<int>(std::min<std::size_t>(batch_size, n_entries - start));
            const double penalty = draw_penalty(settings.loss, epoch_rng);
            if (settings.loss.stochastic) log.penalties.push_back(penalty);

            std::vector<double> sample_loss(static_cast<std::size_t>(n), 0.0);
            std::vector<std::vector<NodeTPtr<float>>> sample_leaves(static_cast<std::size_t>(n));
            parallel_for(n, threads, [&](int s) {
                const PatchEntry& e = entries[start + static_cast<std::size_t>(s)];
                const auto& item = data.items[static_cast<std::size_t>(e.item)];
                Tensor input = extract(item.image, e.spec, sampler.margin);
                SegMask target = extract_mask(item.mask, e.spec);
                if (e.flip_v || e.flip_h) flip_patch(input, target, e.flip_v, e.flip_h);
                std::vector<NodeTPtr<float>> leaves;
                auto probs = model.forward_graph(input, &leaves);
                auto loss = make_loss(settings.loss, probs,
                                      std::make_shared<const SegMask>(std::move(target)), penalty);
                backward(loss);
                sample_loss[static_cast<std::size_t>(s)] = loss->scalar();
                sample_leaves[static_cast<std::size_t>(s)] = std::move(leaves);
            });

            double batch_loss = 0.0;
            for (double l : sample_loss) batch_loss += l;
            batch_loss /= static_cast<double>(n);
            if (!std::isfinite(batch_loss)) {
                std::ostringstream ids;
                for (int s = 0; s < n; ++s) {
                    if (s) ids << ", ";
                    ids << data.items[static_cast<std::size_t>(entries[start + static_cast<std::size_t>(s)].item)].id;
                }
                throw NumericError("train_fold: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                                   std::to_string(start / static_cast<std::size_t>(batch_size)) + " (images: " +
                                   ids.str() + ")");
            }
            loss_sum += batch_loss * n;
            sample_count += static_cast<std::size_t>(n);

            // Mean gradient over the batch, accumulated in sample order.
            std::vector<std::vector<float>> grads(param_ptrs.size());
            for (std::size_t p = 0; p < param_ptrs.size(); ++p) grads[p].assign(param_sizes[p], 0.0f);
            const float inv_n = 1.0f / static_cast<float>(n);
            for (int s = 0; s < n; ++s) {
                const auto& leaves = sample_leaves[static_cast<std::size_t>(s)];
                for (std::size_t p = 0; p < param_ptrs.size(); ++p) {
                    if (!leaves[p]->has_grad()) continue;
                    const std::vector<float>& g = leaves[p]->grad();
                    float* acc = grads[p].data();
                    for (std::size_t i = 0; i < g.size(); ++i) acc[i] += g[i] * inv_n;
                }
            }
            adam_step(param_ptrs, grads, param_names, adam, adam_cfg);
        }
        log.train_loss = sample_count ? loss_sum / static_cast<double>(sample_count) : 0.0;

        // Validation: full-image sliding-window inference, post-processed.
        std::vector<MetricsReport> reports;
        for (int idx : fold.val) {
            const auto& item = data.items[static_cast<std::size_t>(idx)];
            if (!item.has_mask) continue;
            const Tensor probs = predict_full(model, item.image, data.patch_out_w, data.patch_out_h, threads);
            const SegMask pred = fill_holes(largest_component(binarize(probs)));
            reports.push_back(metrics(confusion(pred, item.mask)));
        }
        const MetricsReport val = mean_report(reports);
        log.val_precision = val.precision;
        log.val_recall = val.recall;
        log.val_f1 = val.f1;
        log.val_overlap = val.overlap;

        if (log.val_f1 > best_f1) {
            best_f1 = log.val_f1;
            best_params = model.params();
            best_meta.epoch = static_cast<std::uint32_t>(epoch);
            best_meta.val_f1 = static_cast<float>(log.val_f1);
        }
        if (on_epoch) on_epoch(log);
        result.logs.push_back(std::move(log));
    }

    if (settings.train.epochs > 0) {
        model.params() = std::move(best_params);
        result.meta = best_meta;
    }
    return result;
}

}  // namespace dcpa
