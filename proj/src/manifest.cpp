#include "dcpa/manifest.hpp"

#include <json.hpp>

#include <fstream>
#include <random>
#include <unordered_set>

#include "dcpa/image_io.hpp"

namespace dcpa {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw DataError(std::string(what) + ": cannot open '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string(what) + ": invalid JSON in '" + path.string() + "': " + e.what());
    }
    return j;
}

void check_format(const json& j, const char* what) {
    if (!j.contains("format") || !j["format"].is_number_integer() || j["format"].get<int>() != 1) {
        throw ConfigError(std::string(what) + ": missing or unsupported 'format' key (expected 1)");
    }
}

SplitTag parse_split(const std::string& s) {
    if (s == "train") return SplitTag::train;
    if (s == "test") return SplitTag::test;
    if (s == "unsplit") return SplitTag::unsplit;
    throw ConfigError("manifest: unknown split tag '" + s + "'");
}

const char* split_name(SplitTag t) {
    switch (t) {
        case SplitTag::train: return "train";
        case SplitTag::test: return "test";
        default: return "unsplit";
    }
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
    const json j = read_json(path, "manifest");
    check_format(j, "manifest");
    DatasetManifest m;
    m.base_dir = path.parent_path();
    m.name = j.value("name", std::string("dataset"));
    if (j.contains("patch")) {
        const json& p = j["patch"];
        if (p.contains("output")) {
            m.patch_out_w = p["output"].at(0).get<int>();
            m.patch_out_h = p["output"].at(1).get<int>();
        }
        if (p.contains("input")) {
            m.patch_in_w = p["input"].at(0).get<int>();
            m.patch_in_h = p["input"].at(1).get<int>();
        }
    }
    if (m.patch_out_w < 1 || m.patch_out_h < 1) throw ConfigError("manifest: patch output size must be positive");
    if (!j.contains("images") || !j["images"].is_array() || j["images"].empty()) {
        throw ConfigError("manifest: 'images' must be a non-empty array");
    }
    std::unordered_set<std::string> seen;
    for (const json& rec : j["images"]) {
        ManifestRecord r;
        r.id = rec.at("id").get<std::string>();
        if (!seen.insert(r.id).second) throw ConfigError("manifest: duplicate image id '" + r.id + "'");
        r.image = m.base_dir / rec.at("image").get<std::string>();
        if (rec.contains("mask") && !rec["mask"].is_null()) {
            r.mask = m.base_dir / rec["mask"].get<std::string>();
        }
        r.split = parse_split(rec.value("split", std::string("unsplit")));
        if (!std::filesystem::exists(r.image)) {
            throw DataError("manifest: image file missing for '" + r.id + "': " + r.image.string());
        }
        if (r.has_mask() && !std::filesystem::exists(r.mask)) {
            throw DataError("manifest: mask file missing for '" + r.id + "': " + r.mask.string());
        }
        m.records.push_back(std::move(r));
    }
    return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    json j;
    j["format"] = 1;
    j["name"] = manifest.name;
    j["patch"]["output"] = {manifest.patch_out_w, manifest.patch_out_h};
    if (manifest.patch_in_w > 0) j["patch"]["input"] = {manifest.patch_in_w, manifest.patch_in_h};
    json images = json::array();
    for (const auto& r : manifest.records) {
        json rec;
        rec["id"] = r.id;
        rec["image"] = std::filesystem::relative(r.image, manifest.base_dir).generic_string();
        if (r.has_mask()) rec["mask"] = std::filesystem::relative(r.mask, manifest.base_dir).generic_string();
        rec["split"] = split_name(r.split);
        images.push_back(std::move(rec));
    }
    j["images"] = std::move(images);
    std::ofstream out(path);
    if (!out) throw DataError("manifest: cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

Dataset load_dataset(const DatasetManifest& manifest, bool require_masks) {
    Dataset d;
    d.patch_out_w = manifest.patch_out_w;
    d.patch_out_h = manifest.patch_out_h;
    d.items.reserve(manifest.records.size());
    for (const auto& r : manifest.records) {
        DatasetItem item;
        item.id = r.id;
        item.split = r.split;
        item.image = load_image_rgb(r.image);
        if (r.has_mask()) {
            item.mask = load_mask(r.mask);
            item.has_mask = true;
            if (item.mask.h != item.image.dim(1) || item.mask.w != item.image.dim(2)) {
                throw DataError("dataset: image/mask dimensions differ for '" + r.id + "' (" +
                                std::to_string(item.image.dim(2)) + "x" + std::to_string(item.image.dim(1)) +
                                " vs " + std::to_string(item.mask.w) + "x" + std::to_string(item.mask.h) + ")");
            }
        } else if (require_masks) {
            throw DataError("dataset: record '" + r.id + "' has no ground-truth mask");
        }
        d.items.push_back(std::move(item));
    }
    return d;
}

void RunConfig::validate() const {
    model.validate();
    train.validate();
    loss.validate();
    if (!(sampler_ratio > 0.0 && sampler_ratio <= 1.0)) {
        throw ConfigError("sampler: ratio must be in (0,1]");
    }
    if (sampler_min_positive < 0) throw ConfigError("sampler: min_positive must be >= 0");
    if (manifest_path.empty()) throw ConfigError("run config: 'manifest' is required");
    if (output_dir.empty()) throw ConfigError("run config: 'output_dir' is required");
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const json j = read_json(path, "run config");
    check_format(j, "run config");
    RunConfig cfg;
    const auto base = path.parent_path();
    if (!j.contains("manifest")) throw ConfigError("run config: 'manifest' is required");
    cfg.manifest_path = base / j["manifest"].get<std::string>();
    if (!j.contains("output_dir")) throw ConfigError("run config: 'output_dir' is required");
    cfg.output_dir = base / j["output_dir"].get<std::string>();

    if (j.contains("model")) {
        const json& m = j["model"];
        cfg.model.depth = m.value("depth", cfg.model.depth);
        cfg.model.base_width = m.value("base_width", cfg.model.base_width);
        cfg.model.in_channels = m.value("in_channels", cfg.model.in_channels);
        cfg.model.num_classes = m.value("num_classes", cfg.model.num_classes);
        if (m.contains("seed")) cfg.model.seed = m["seed"].get<std::uint64_t>();
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.folds = t.value("folds", cfg.train.folds);
        cfg.train.validation_fraction = t.value("validation_fraction", cfg.train.validation_fraction);
        cfg.train.lr = t.value("lr", cfg.train.lr);
        cfg.train.threads = t.value("threads", cfg.train.threads);
        if (t.contains("seed")) {
            cfg.train.seed = t["seed"].get<std::uint64_t>();
            cfg.train.seed_set = true;
        }
    }
    if (!cfg.train.seed_set) {
        std::random_device rd;
        cfg.train.seed = (static_cast<std::uint64_t>(rd()) << 32) | rd();
        cfg.train.seed_set = true;
    }
    if (!j.contains("model") || !j["model"].contains("seed")) {
        cfg.model.seed = seed_stream({cfg.train.seed, 0x6d6f64656cULL});
    }
    if (j.contains("loss")) {
        const json& l = j["loss"];
        const std::string kind = l.value("kind", std::string("dice"));
        if (kind == "dice") {
            cfg.loss.kind = LossKind::dice;
        } else if (kind == "cross_entropy") {
            cfg.loss.kind = LossKind::cross_entropy;
        } else {
            throw ConfigError("loss: unknown kind '" + kind + "'");
        }
        cfg.loss.stochastic = l.value("stochastic", cfg.loss.stochastic);
        cfg.loss.alpha = l.value("alpha", cfg.loss.alpha);
        cfg.loss.step = l.value("step", cfg.loss.step);
        cfg.loss.eps = l.value("eps", cfg.loss.eps);
    }
    cfg.loss.seed = seed_stream({cfg.train.seed, 0x6c6f7373ULL});
    if (j.contains("sampler")) {
        const json& s = j["sampler"];
        cfg.sampler_ratio = s.value("ratio", cfg.sampler_ratio);
        cfg.sampler_min_positive = s.value("min_positive", cfg.sampler_min_positive);
        cfg.sampler_include_corners = s.value("include_corners", cfg.sampler_include_corners);
        const std::string mode = s.value("mode", std::string("disc_centered"));
        if (mode == "disc_centered") {
            cfg.sampler_mode = SamplerMode::disc_centered;
        } else if (mode == "uniform") {
            cfg.sampler_mode = SamplerMode::uniform;
        } else {
            throw ConfigError("sampler: unknown mode '" + mode + "'");
        }
    }
    cfg.validate();
    return cfg;
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& path) {
    json j;
    j["format"] = 1;
    const auto base = path.parent_path();
    j["manifest"] = std::filesystem::relative(cfg.manifest_path, base).generic_string();
    j["output_dir"] = std::filesystem::relative(cfg.output_dir, base).generic_string();
    j["model"] = {{"depth", cfg.model.depth},
                  {"base_width", cfg.model.base_width},
                  {"in_channels", cfg.model.in_channels},
                  {"num_classes", cfg.model.num_classes},
                  {"seed", cfg.model.seed}};
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"folds", cfg.train.folds},
                  {"validation_fraction", cfg.train.validation_fraction},
                  {"lr", cfg.train.lr},
                  {"seed", cfg.train.seed},
                  {"threads", cfg.train.threads}};
    j["loss"] = {{"kind", loss_kind_name(cfg.loss.kind)},
                 {"stochastic", cfg.loss.stochastic},
                 {"alpha", cfg.loss.alpha},
                 {"step", cfg.loss.step},
                 {"eps", cfg.loss.eps}};
    j["sampler"] = {{"ratio", cfg.sampler_ratio},
                    {"min_positive", cfg.sampler_min_positive},
                    {"include_corners", cfg.sampler_include_corners},
                    {"mode", cfg.sampler_mode == SamplerMode::uniform ? "uniform" : "disc_centered"}};
    std::ofstream out(path);
    if (!out) throw DataError("run config: cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

}  // namespace dcpa
