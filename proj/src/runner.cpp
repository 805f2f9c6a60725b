#include "dcpa/runner.hpp"

#include <cstdio>
#include <fstream>

#include "dcpa/image_io.hpp"
#include "dcpa/inference.hpp"
#include "dcpa/morphology.hpp"

namespace dcpa {

namespace {

std::string g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const std::vector<std::pair<std::string, MetricsReport>>& rows,
                       const std::vector<ConfusionCounts>& counts) {
    out << "id,tp,fp,fn,tn,precision,recall,f1,overlap\n";
    ConfusionCounts total;
    std::vector<MetricsReport> reports;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& [id, r] = rows[i];
        const ConfusionCounts& c = counts[i];
        out << id << ',' << c.tp << ',' << c.fp << ',' << c.fn << ',' << c.tn << ',' << g9(r.precision) << ','
            << g9(r.recall) << ',' << g9(r.f1) << ',' << g9(r.overlap) << '\n';
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn += c.fn;
        total.tn += c.tn;
        reports.push_back(r);
    }
    const MetricsReport mean = mean_report(reports);
    out << "mean," << total.tp << ',' << total.fp << ',' << total.fn << ',' << total.tn << ','
        << g9(mean.precision) << ',' << g9(mean.recall) << ',' << g9(mean.f1) << ',' << g9(mean.overlap) << '\n';
}

RunOutcome run_training(const RunConfig& cfg, int only_fold) {
    cfg.validate();
    const DatasetManifest manifest = load_manifest(cfg.manifest_path);
    const Dataset data = load_dataset(manifest, /*require_masks=*/true);
    geometry_for_output(cfg.model.depth, data.patch_out_w, data.patch_out_h);
    if (manifest.patch_in_w > 0) {
        const GeometrySpec g = geometry_for_output(cfg.model.depth, manifest.patch_out_w, manifest.patch_out_h);
        if (manifest.patch_in_w != g.input_w || manifest.patch_in_h != g.input_h) {
            throw ConfigError("manifest input size " + std::to_string(manifest.patch_in_w) + "x" +
                              std::to_string(manifest.patch_in_h) + " does not match the depth-" +
                              std::to_string(cfg.model.depth) + " geometry (" + std::to_string(g.input_w) + "x" +
                              std::to_string(g.input_h) + ")");
        }
    }

    std::filesystem::create_directories(cfg.output_dir);
    save_run_config(cfg, cfg.output_dir / "run_config.json");

    std::vector<SplitTag> tags;
    for (const auto& item : data.items) tags.push_back(item.split);
    Rng fold_rng(seed_stream({cfg.train.seed, 0xF01D5ULL}));
    const FoldPlan plan = make_folds(tags, cfg.train, fold_rng);

    TrainSettings settings;
    settings.model = cfg.model;
    settings.train = cfg.train;
    settings.loss = cfg.loss;
    settings.sampler_ratio = cfg.sampler_ratio;
    settings.sampler_min_positive = cfg.sampler_min_positive;
    settings.sampler_include_corners = cfg.sampler_include_corners;
    settings.sampler_mode = cfg.sampler_mode;

    RunOutcome outcome;
    outcome.output_dir = cfg.output_dir;
    for (int f = 0; f < static_cast<int>(plan.folds.size()); ++f) {
        if (only_fold >= 0 && f != only_fold) continue;
        const FoldSplit& fold = plan.folds[static_cast<std::size_t>(f)];
        const auto fold_dir = cfg.output_dir / ("fold_" + std::to_string(f));
        std::filesystem::create_directories(fold_dir / "masks");
        std::filesystem::create_directories(fold_dir / "overlays");

        std::ofstream log_csv(fold_dir / "log.csv", std::ios::binary);
        std::ofstream penalties_csv(fold_dir / "penalties.csv", std::ios::binary);
        if (!log_csv || !penalties_csv) throw DataError("run: cannot write logs under " + fold_dir.string());
        write_epoch_csv_header(log_csv);
        penalties_csv << "epoch,batch,penalty\n";
        const auto on_epoch = [&](const EpochLog& log) {
            write_epoch_csv_row(log_csv, log);
            log_csv.flush();
            for (std::size_t b = 0; b < log.penalties.size(); ++b) {
                penalties_csv << log.epoch << ',' << b << ',' << g9(log.penalties[b]) << '\n';
            }
            penalties_csv.flush();
        };

        TrainResult result = train_fold(data, fold, settings, on_epoch);

        FoldOutcome fo;
        fo.fold = f;
        fo.best = result.meta;
        fo.warnings = result.warnings;
        fo.checkpoint_path = fold_dir / "best.ckpt";
        save_checkpoint(result.model, result.meta, fo.checkpoint_path);

        std::vector<ConfusionCounts> counts;
        std::vector<MetricsReport> reports;
        for (int idx : fold.test) {
            const auto& item = data.items[static_cast<std::size_t>(idx)];
            const Tensor probs =
                predict_full(result.model, item.image, data.patch_out_w, data.patch_out_h, cfg.train.threads);
            const SegMask pred = fill_holes(largest_component(binarize(probs)));
            save_mask(pred, fold_dir / "masks" / (item.id + ".png"));
            if (item.has_mask) {
                save_overlay(item.image, pred, item.mask, fold_dir / "overlays" / (item.id + ".png"));
                const ConfusionCounts c = confusion(pred, item.mask);
                counts.push_back(c);
                const MetricsReport r = metrics(c);
                reports.push_back(r);
                fo.per_image.emplace_back(item.id, r);
            }
        }
        fo.test_mean = mean_report(reports);
        std::ofstream metrics_csv(fold_dir / "test_metrics.csv", std::ios::binary);
        write_metrics_csv(metrics_csv, fo.per_image, counts);
        outcome.folds.push_back(std::move(fo));
    }
    return outcome;
}

}  // namespace dcpa
