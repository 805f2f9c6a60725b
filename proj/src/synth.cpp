#include "dcpa/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "dcpa/image_io.hpp"
#include "dcpa/rng.hpp"

namespace dcpa {

namespace {

struct Ellipse {
    double cx, cy;    // center
    double a, b;      // semi-axes
    double cos_t, sin_t;

    // < 1 inside, 1 on the boundary.
    double q(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double u = (dx * cos_t + dy * sin_t) / a;
        const double v = (-dx * sin_t + dy * cos_t) / b;
        return u * u + v * v;
    }
};

void stamp_disk(std::vector<float>& weight, int size, double cx, double cy, double radius) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius - 1)));
    const int x1 = std::min(size - 1, static_cast<int>(std::ceil(cx + radius + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius - 1)));
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(cy + radius + 1)));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double d = std::hypot(x - cx, y - cy);
            const float a = static_cast<float>(std::clamp(radius + 0.5 - d, 0.0, 1.0));
            float& wv = weight[static_cast<std::size_t>(y) * size + x];
            wv = std::max(wv, a);
        }
    }
}

}  // namespace

DatasetManifest synth_dataset(const std::filesystem::path& dir, int count, int image_size, int patch_out,
                              std::uint64_t seed) {
    if (count < 1) throw ConfigError("synth: count must be >= 1");
    if (image_size < 32) throw ConfigError("synth: image size must be >= 32");
    if (patch_out < 16 || patch_out > image_size) {
        throw ConfigError("synth: patch size must be in [16, image size]");
    }
    std::filesystem::create_directories(dir / "images");
    std::filesystem::create_directories(dir / "masks");

    DatasetManifest manifest;
    manifest.name = "synthetic";
    manifest.base_dir = dir;
    manifest.patch_out_w = manifest.patch_out_h = patch_out;

    const double s = image_size;
    const double fov_r = 0.48 * s;
    const double fov_cx = s / 2.0, fov_cy = s / 2.0;

    for (int i = 0; i < count; ++i) {
        Rng rng(seed_stream({seed, 0x73796e7468ULL, static_cast<std::uint64_t>(i)}));

        // Disc geometry: area fraction of the field of view in [0.045, 0.085],
        // axes capped so the bounding box fits the patch with slack.
        const double frac = 0.045 + 0.04 * rng.next_real01();
        double r0 = fov_r * std::sqrt(frac);
        const double ecc = 1.0 + 0.15 * rng.next_real01();
        const double max_semi = (patch_out - 10) / 2.0;
        if (r0 * ecc > max_semi) r0 = max_semi / ecc;
        Ellipse disc;
        disc.a = r0 * ecc;
        disc.b = r0 / ecc;
        const double theta = 3.141592653589793 * rng.next_real01();
        disc.cos_t = std::cos(theta);
        disc.sin_t = std::sin(theta);
        // Uniform center inside the field of view, whole ellipse inside.
        const double keep = fov_r - disc.a - 3.0;
        while (true) {
            const double px = (2.0 * rng.next_real01() - 1.0) * keep;
            const double py = (2.0 * rng.next_real01() - 1.0) * keep;
            if (px * px + py * py <= keep * keep) {
                disc.cx = fov_cx + px;
                disc.cy = fov_cy + py;
                break;
            }
        }

        // Vessels: random-walk polylines through the disc center.
        std::vector<float> vessel(static_cast<std::size_t>(image_size) * image_size, 0.0f);
        const int n_vessels = static_cast<int>(rng.next_int(3, 5));
        for (int v = 0; v < n_vessels; ++v) {
            double ang = 2.0 * 3.141592653589793 * rng.next_real01();
            const double thickness = 1.2 + 1.3 * rng.next_real01();
            for (int dir = -1; dir <= 1; dir += 2) {
                double x = disc.cx, y = disc.cy;
                double a2 = ang + (dir < 0 ? 3.141592653589793 : 0.0);
                for (int step = 0; step < 2 * image_size; ++step) {
                    x += 2.0 * std::cos(a2);
                    y += 2.0 * std::sin(a2);
                    a2 += 0.25 * (rng.next_real01() - 0.5);
                    if (std::hypot(x - fov_cx, y - fov_cy) > fov_r - 1.0) break;
                    stamp_disk(vessel, image_size, x, y, thickness);
                }
            }
        }

        Tensor image({3, image_size, image_size});
        SegMask mask(image_size, image_size);
        const std::size_t plane = static_cast<std::size_t>(image_size) * image_size;
        for (int y = 0; y < image_size; ++y) {
            for (int x = 0; x < image_size; ++x) {
                const std::size_t idx = static_cast<std::size_t>(y) * image_size + x;
                const double d_fov = std::hypot(x - fov_cx, y - fov_cy);
                double r = 0.02, g = 0.02, b = 0.02;
                if (d_fov <= fov_r) {
                    const double vig = 1.0 - 0.35 * (d_fov / fov_r) * (d_fov / fov_r);
                    r = 0.58 * vig;
                    g = 0.27 * vig;
                    b = 0.11 * vig;
                    const double q = disc.q(x, y);
                    if (q <= 1.0) mask.data[idx] = 1;
                    // Soft-edged bright disc (~1.5 px transition).
                    const double edge = std::clamp((1.0 - q) * disc.b * 0.75 + 0.5, 0.0, 1.0);
                    if (edge > 0.0) {
                        r += edge * (0.95 - r);
                        g += edge * (0.84 - g);
                        b += edge * (0.52 - b);
                    }
                    const double vw = vessel[idx];
                    if (vw > 0.0f) {
                        r += vw * (0.30 - r);
                        g += vw * (0.09 - g);
                        b += vw * (0.07 - b);
                    }
                }
                const double noise = 0.015 * rng.next_normal();
                image[idx] = static_cast<float>(std::clamp(r + noise, 0.0, 1.0));
                image[plane + idx] = static_cast<float>(std::clamp(g + noise, 0.0, 1.0));
                image[2 * plane + idx] = static_cast<float>(std::clamp(b + noise, 0.0, 1.0));
            }
        }

        char name[32];
        std::snprintf(name, sizeof(name), "img_%03d", i);
        ManifestRecord rec;
        rec.id = name;
        rec.image = dir / "images" / (std::string(name) + ".png");
        rec.mask = dir / "masks" / (std::string(name) + ".png");
        save_image_rgb(image, rec.image);
        save_mask(mask, rec.mask);
        manifest.records.push_back(std::move(rec));
    }
    save_manifest(manifest, dir / "manifest.json");
    return manifest;
}

}  // namespace dcpa
