// Command-line surface for the optic-disc segmentation toolkit.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "dcpa/checkpoint.hpp"
#include "dcpa/image_io.hpp"
#include "dcpa/inference.hpp"
#include "dcpa/manifest.hpp"
#include "dcpa/morphology.hpp"
#include "dcpa/runner.hpp"
#include "dcpa/sampler.hpp"
#include "dcpa/synth.hpp"
#include "dcpa/trainer.hpp"

namespace fs = std::filesystem;
using namespace dcpa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

int cmd_train(const std::string& config_path, int fold) {
    const RunConfig cfg = load_run_config(config_path);
    const RunOutcome outcome = run_training(cfg, fold);
    for (const auto& fo : outcome.folds) {
        for (const auto& w : fo.warnings) std::cerr << "warning: fold " << fo.fold << ": " << w << '\n';
        std::printf("fold %d: best epoch %u (val F1 %.4f); test precision %.4f recall %.4f f1 %.4f overlap %.4f\n",
                    fo.fold, fo.best.epoch, fo.best.val_f1, fo.test_mean.precision, fo.test_mean.recall,
                    fo.test_mean.f1, fo.test_mean.overlap);
    }
    std::printf("outputs written to %s\n", outcome.output_dir.string().c_str());
    return kExitOk;
}

void predict_one(const Unet& model, const std::string& id, const Tensor& image, int patch_out_w, int patch_out_h,
                 const fs::path& out_dir, bool raw, bool probs_out, int threads) {
    const Tensor probs = predict_full(model, image, patch_out_w, patch_out_h, threads);
    SegMask pred = binarize(probs);
    if (!raw) pred = fill_holes(largest_component(pred));
    save_mask(pred, out_dir / (id + ".png"));
    if (probs_out) save_prob_map(probs, out_dir / (id + "_prob.bin"));
}

int cmd_predict(const std::string& checkpoint, const std::string& image_path, const std::string& manifest_path,
                const std::string& out_dir, int patch_out, bool raw, bool probs_out, int threads) {
    if (image_path.empty() == manifest_path.empty()) {
        throw ConfigError("predict: exactly one of --image or --manifest is required");
    }
    const Unet model = load_checkpoint(checkpoint);
    fs::create_directories(out_dir);
    if (!image_path.empty()) {
        const Tensor image = load_image_rgb(image_path);
        const std::string id = fs::path(image_path).stem().string();
        predict_one(model, id, image, patch_out, patch_out, out_dir, raw, probs_out, threads);
        std::printf("wrote %s\n", (fs::path(out_dir) / (id + ".png")).string().c_str());
        return kExitOk;
    }
    const DatasetManifest manifest = load_manifest(manifest_path);
    const Dataset data = load_dataset(manifest, /*require_masks=*/false);
    for (const auto& item : data.items) {
        predict_one(model, item.id, item.image, data.patch_out_w, data.patch_out_h, out_dir, raw, probs_out,
                    threads);
    }
    std::printf("wrote %zu masks to %s\n", data.items.size(), out_dir.c_str());
    return kExitOk;
}

int cmd_metrics(const std::string& pred_dir, const std::string& truth_dir, const std::string& out_csv) {
    std::map<std::string, fs::path> truths;
    for (const auto& entry : fs::directory_iterator(truth_dir)) {
        if (entry.path().extension() == ".png") truths[entry.path().stem().string()] = entry.path();
    }
    if (truths.empty()) throw DataError("metrics: no .png masks in '" + truth_dir + "'");
    std::vector<std::pair<std::string, MetricsReport>> rows;
    std::vector<ConfusionCounts> counts;
    for (const auto& [id, truth_path] : truths) {
        const fs::path pred_path = fs::path(pred_dir) / (id + ".png");
        if (!fs::exists(pred_path)) throw DataError("metrics: missing prediction for '" + id + "'");
        const ConfusionCounts c = confusion(load_mask(pred_path), load_mask(truth_path));
        counts.push_back(c);
        rows.emplace_back(id, metrics(c));
    }
    if (!out_csv.empty()) {
        std::ofstream out(out_csv, std::ios::binary);
        if (!out) throw DataError("metrics: cannot write '" + out_csv + "'");
        write_metrics_csv(out, rows, counts);
    }
    std::vector<MetricsReport> reports;
    for (const auto& [id, r] : rows) reports.push_back(r);
    const MetricsReport mean = mean_report(reports);
    std::printf("images %zu: precision %.4f recall %.4f f1 %.4f overlap %.4f\n", rows.size(), mean.precision,
                mean.recall, mean.f1, mean.overlap);
    return kExitOk;
}

int cmd_sample_patches(const std::string& manifest_path, double ratio, std::int64_t min_positive, bool corners,
                       std::uint64_t seed, const std::string& out_path) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    const Dataset data = load_dataset(manifest, /*require_masks=*/true);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::binary);
        if (!file) throw DataError("sample-patches: cannot write '" + out_path + "'");
        out = &file;
    }
    SamplerConfig cfg;
    cfg.ratio = ratio;
    cfg.min_positive = min_positive;
    cfg.patch_w = data.patch_out_w;
    cfg.patch_h = data.patch_out_h;
    cfg.include_corners = corners;
    for (std::size_t i = 0; i < data.items.size(); ++i) {
        const auto& item = data.items[i];
        Rng rng(seed_stream({seed, 0xA11CE, 1, static_cast<std::uint64_t>(i)}));
        const int population =
            static_cast<int>(tiling(item.image.dim(2), item.image.dim(1), cfg.patch_w, cfg.patch_h).size());
        SampleResult sr = sample_disc_patches(item.mask, cfg, population, rng);
        for (const auto& w : sr.warnings) std::cerr << "warning: " << item.id << ": " << w << '\n';
        std::vector<PatchSpec> specs = sr.specs;
        if (corners) {
            const auto cs = corner_patches(item.image.dim(2), item.image.dim(1), cfg);
            specs.insert(specs.end(), cs.begin(), cs.end());
        }
        for (const auto& spec : specs) {
            const SegMask m = extract_mask(item.mask, spec);
            (*out) << item.id << ' ' << spec.x << ' ' << spec.y << ' ' << spec.w << ' ' << spec.h << ' '
                   << m.positive_count() << '\n';
        }
    }
    return kExitOk;
}

int cmd_synth(const std::string& out_dir, int count, int size, int patch_out, std::uint64_t seed) {
    const DatasetManifest m = synth_dataset(out_dir, count, size, patch_out, seed);
    std::printf("wrote %zu images under %s (patch output %dx%d)\n", m.records.size(), out_dir.c_str(),
                m.patch_out_w, m.patch_out_h);
    return kExitOk;
}

int cmd_info(int depth, int width, int in_channels, int output_size, int input_size) {
    ModelConfig cfg;
    cfg.depth = depth;
    cfg.base_width = width;
    cfg.in_channels = in_channels;
    cfg.validate();
    std::printf("depth %d, base width %d: %lld parameters\n", depth, width,
                static_cast<long long>(param_count(cfg)));
    std::printf("context margin: %d pixels per side\n", unet_margin(depth));
    if (output_size > 0) {
        const GeometrySpec g = geometry_for_output(depth, output_size, output_size);
        std::printf("output %dx%d -> input %dx%d\n", g.output_w, g.output_h, g.input_w, g.input_h);
    }
    if (input_size > 0) {
        const GeometrySpec g = geometry_for_input(depth, input_size, input_size);
        std::printf("input %dx%d -> output %dx%d\n", g.input_w, g.input_h, g.output_w, g.output_h);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optic-disc segmentation with disc-centered patch augmentation"};
    app.require_subcommand(1);

    auto* train = app.add_subcommand("train", "Train from a run-config file");
    std::string train_config;
    int train_fold_arg = -1;
    train->add_option("--config", train_config, "Run-config JSON file")->required();
    train->add_option("--fold", train_fold_arg, "Train only this fold (default: all)");

    auto* predict = app.add_subcommand("predict", "Apply a checkpoint to images");
    std::string pr_checkpoint, pr_image, pr_manifest, pr_out;
    int pr_patch_out = 388;
    int pr_threads = 0;
    bool pr_raw = false, pr_probs = false;
    predict->add_option("--checkpoint", pr_checkpoint, "Checkpoint file")->required();
    predict->add_option("--image", pr_image, "Single input image (PNG)");
    predict->add_option("--manifest", pr_manifest, "Dataset manifest");
    predict->add_option("--out", pr_out, "Output directory")->required();
    predict->add_option("--patch-out", pr_patch_out, "Output patch size for --image mode (default 388)");
    predict->add_option("--threads", pr_threads, "Worker threads (0 = auto)");
    predict->add_flag("--raw", pr_raw, "Skip largest-component/hole-filling post-processing");
    predict->add_flag("--probs", pr_probs, "Also write raw probability maps");

    auto* metrics_cmd = app.add_subcommand("metrics", "Compare predicted and truth mask directories");
    std::string me_pred, me_truth, me_out;
    metrics_cmd->add_option("--pred", me_pred, "Directory of predicted masks")->required();
    metrics_cmd->add_option("--truth", me_truth, "Directory of truth masks")->required();
    metrics_cmd->add_option("--out", me_out, "Output CSV path");

    auto* sample = app.add_subcommand("sample-patches", "Dump DCPA patch records for a manifest");
    std::string sp_manifest, sp_out;
    double sp_ratio = 0.5;
    std::int64_t sp_min_positive = 500;
    bool sp_no_corners = false;
    std::uint64_t sp_seed = 0;
    sample->add_option("--manifest", sp_manifest, "Dataset manifest")->required();
    sample->add_option("--ratio", sp_ratio, "Disc-patch ratio r (default 0.5)");
    sample->add_option("--min-positive", sp_min_positive, "Positive-pixel floor T (default 500)");
    sample->add_flag("--no-corners", sp_no_corners, "Skip the four corner patches");
    sample->add_option("--seed", sp_seed, "Sampling seed");
    sample->add_option("--out", sp_out, "Output file (default: stdout)");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic fundus-like dataset");
    std::string sy_out;
    int sy_count = 30, sy_size = 256, sy_patch = 100;
    std::uint64_t sy_seed = 12345;
    synth->add_option("--out", sy_out, "Output directory")->required();
    synth->add_option("--count", sy_count, "Number of images (default 30)");
    synth->add_option("--size", sy_size, "Image size in pixels (default 256)");
    synth->add_option("--patch-out", sy_patch, "Patch output size stored in the manifest (default 100)");
    synth->add_option("--seed", sy_seed, "Generator seed (default 12345)");

    auto* info = app.add_subcommand("info", "Print parameter count and geometry for a config");
    int in_depth = 4, in_width = 64, in_channels = 3, in_output = 0, in_input = 0;
    info->add_option("--depth", in_depth, "Down-sampling stages (default 4)");
    info->add_option("--width", in_width, "Base channel width (default 64)");
    info->add_option("--in-channels", in_channels, "Input channels (default 3)");
    info->add_option("--output-size", in_output, "Report the input size for this output size");
    info->add_option("--input-size", in_input, "Report the output size for this input size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train) return cmd_train(train_config, train_fold_arg);
        if (*predict) {
            return cmd_predict(pr_checkpoint, pr_image, pr_manifest, pr_out, pr_patch_out, pr_raw, pr_probs,
                               pr_threads);
        }
        if (*metrics_cmd) return cmd_metrics(me_pred, me_truth, me_out);
        if (*sample) return cmd_sample_patches(sp_manifest, sp_ratio, sp_min_positive, !sp_no_corners, sp_seed, sp_out);
        if (*synth) return cmd_synth(sy_out, sy_count, sy_size, sy_patch, sy_seed);
        if (*info) return cmd_info(in_depth, in_width, in_channels, in_output, in_input);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
