#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "dcpa/sampler.hpp"
#include "oracles.hpp"

using namespace dcpa;

namespace {

SegMask ellipse_mask(int h, int w, double cx, double cy, double rx, double ry) {
    SegMask m(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double u = (x - cx) / rx, v = (y - cy) / ry;
            if (u * u + v * v <= 1.0) m.at(y, x) = 1;
        }
    }
    return m;
}

bool contains_bbox(const PatchSpec& p, const MaskStats& s) {
    return p.x <= s.x0 && p.y <= s.y0 && p.x + p.w > s.x1 && p.y + p.h > s.y1;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("mask_stats: symmetric corners give center (1,1)") {
    SegMask m(3, 3);
    m.at(0, 0) = m.at(0, 2) = m.at(2, 0) = m.at(2, 2) = 1;
    const MaskStats s = mask_stats(m);
    CHECK(s.positive_count == 4);
    CHECK(s.cx == 1.0);
    CHECK(s.cy == 1.0);
    CHECK(s.x0 == 0);
    CHECK(s.y0 == 0);
    CHECK(s.x1 == 2);
    CHECK(s.y1 == 2);
}

TEST_CASE("mask_stats: singleton and empty masks") {
    SegMask m(10, 10);
    m.at(7, 5) = 1;
    const MaskStats s = mask_stats(m);
    CHECK(s.cx == 5.0);
    CHECK(s.cy == 7.0);
    CHECK(s.bbox_w() == 1);

    const MaskStats e = mask_stats(SegMask(4, 4));
    CHECK(e.empty());
}

TEST_CASE("mask_stats: center equals an independent coordinate-mean scan") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        SegMask m(32, 32);
        for (auto& v : m.data) v = rng.next_index(4) == 0 ? 1 : 0;
        m.at(10, 10) = 1;
        const MaskStats s = mask_stats(m);
        double sx = 0, sy = 0;
        std::int64_t n = 0;
        for (int y = 0; y < 32; ++y) {
            for (int x = 0; x < 32; ++x) {
                if (m.at(y, x)) {
                    sx += x;
                    sy += y;
                    ++n;
                }
            }
        }
        CHECK(s.positive_count == n);
        CHECK(s.cx == doctest::Approx(sx / n));
        CHECK(s.cy == doctest::Approx(sy / n));
        CHECK(s.cx >= s.x0);
        CHECK(s.cx <= s.x1);
        CHECK(s.cy >= s.y0);
        CHECK(s.cy <= s.y1);
    }
}

TEST_CASE("sample_disc_patches: returns ceil(r*P) containing, in-bounds patches") {
    const SegMask mask = ellipse_mask(200, 200, 120, 80, 20, 15);
    const MaskStats stats = mask_stats(mask);
    SamplerConfig cfg;
    cfg.patch_w = cfg.patch_h = 100;
    cfg.min_positive = 50;
    cfg.ratio = 0.5;
    Rng rng(1);
    // r=0.5, P=10 -> exactly 5 specs
    const SampleResult r = sample_disc_patches(mask, cfg, 10, rng);
    CHECK(r.specs.size() == 5);
    CHECK(r.warnings.empty());
    for (const auto& p : r.specs) {
        CHECK(contains_bbox(p, stats));
        CHECK(p.x >= 0);
        CHECK(p.y >= 0);
        CHECK(p.x + p.w <= mask.w);
        CHECK(p.y + p.h <= mask.h);
        CHECK(extract_mask(mask, p).positive_count() == stats.positive_count);
    }
}

TEST_CASE("sample_disc_patches: invariants hold over many random masks") {
    Rng meta(99);
    int draws = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const int w = 120 + static_cast<int>(meta.next_index(100));
        const int h = 120 + static_cast<int>(meta.next_index(100));
        const int rx = 5 + static_cast<int>(meta.next_index(18));
        const int ry = 5 + static_cast<int>(meta.next_index(18));
        const int cx = rx + 1 + static_cast<int>(meta.next_index(w - 2 * rx - 2));
        const int cy = ry + 1 + static_cast<int>(meta.next_index(h - 2 * ry - 2));
        const SegMask mask = ellipse_mask(h, w, cx, cy, rx, ry);
        const MaskStats stats = mask_stats(mask);
        SamplerConfig cfg;
        cfg.patch_w = cfg.patch_h = 100;
        cfg.min_positive = 50;
        Rng rng(meta.next_u64());
        const SampleResult r = sample_disc_patches(mask, cfg, 16, rng);
        CHECK(r.specs.size() == 8);
        for (const auto& p : r.specs) {
            ++draws;
            CHECK(contains_bbox(p, stats));
            CHECK(p.x >= 0);
            CHECK(p.y >= 0);
            CHECK(p.x + p.w <= w);
            CHECK(p.y + p.h <= h);
            CHECK(extract_mask(mask, p).positive_count() >= cfg.min_positive);
        }
    }
    CHECK(draws == 320);
}

TEST_CASE("sample_disc_patches: bbox exactly patch-sized leaves only the zero-shift placement") {
    SegMask mask(60, 60);
    for (int y = 10; y < 30; ++y) {
        for (int x = 20; x < 40; ++x) mask.at(y, x) = 1;
    }
    SamplerConfig cfg;
    cfg.patch_w = cfg.patch_h = 20;
    cfg.min_positive = 0;
    Rng rng(3);
    const SampleResult r = sample_disc_patches(mask, cfg, 8, rng);
    REQUIRE(!r.specs.empty());
    for (const auto& p : r.specs) {
        CHECK(p.x == 20);
        CHECK(p.y == 10);
    }
}

TEST_CASE("sample_disc_patches: oversized bbox falls back to one clamped patch with a warning") {
    const SegMask mask = ellipse_mask(100, 100, 50, 50, 40, 40);
    SamplerConfig cfg;
    cfg.patch_w = cfg.patch_h = 50;
    cfg.min_positive = 0;
    Rng rng(4);
    const SampleResult r = sample_disc_patches(mask, cfg, 10, rng);
    CHECK(r.specs.size() == 1);
    CHECK(r.used_fallback);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.specs[0].x >= 0);
    CHECK(r.specs[0].x + r.specs[0].w <= 100);
}

TEST_CASE("sample_disc_patches: zero shift recovers a patch centered on the center of mass") {
    const SegMask mask = ellipse_mask(300, 300, 150, 150, 12, 12);
    const MaskStats stats = mask_stats(mask);
    SamplerConfig cfg;
    cfg.patch_w = cfg.patch_h = 100;
    cfg.min_positive = 0;
    // The feasible interval is symmetric around the centered placement here,
    // so its midpoint equals center-of-mass minus half the patch.
    const int lo_x = std::max(0, stats.x1 - cfg.patch_w + 1);
    const int hi_x = std::min(stats.x0, mask.w - cfg.patch_w);
    const int centered = static_cast<int>(std::lround(stats.cx)) - cfg.patch_w / 2;
    CHECK((lo_x + hi_x) / 2 == centered);
}

TEST_CASE("sampling is reproducible for a fixed seed") {
    const SegMask mask = ellipse_mask(256, 256, 90, 170, 25, 20);
    SamplerConfig cfg;
    cfg.patch_w = cfg.patch_h = 100;
    Rng a(42), b(42);
    const auto ra = sample_disc_patches(mask, cfg, 9, a);
    const auto rb = sample_disc_patches(mask, cfg, 9, b);
    CHECK(ra.specs == rb.specs);
}

TEST_CASE("shift distribution covers the feasible offset set") {
    const SegMask mask = ellipse_mask(256, 256, 128, 128, 12, 12);
    const MaskStats stats = mask_stats(mask);
    SamplerConfig cfg;
    cfg.patch_w = cfg.patch_h = 100;
    cfg.min_positive = 0;
    const int lo_x = std::max(0, stats.x1 - cfg.patch_w + 1);
    const int hi_x = std::min(stats.x0, mask.w - cfg.patch_w);
    const int lo_y = std::max(0, stats.y1 - cfg.patch_h + 1);
    const int hi_y = std::min(stats.y0, mask.h - cfg.patch_h);

    Rng rng(7);
    const SampleResult r = sample_disc_patches(mask, cfg, 2000, rng);
    // coarse 8x8 histogram over the feasible rectangle
    std::set<std::pair<int, int>> cells;
    for (const auto& p : r.specs) {
        const int bx = (p.x - lo_x) * 8 / (hi_x - lo_x + 1);
        const int by = (p.y - lo_y) * 8 / (hi_y - lo_y + 1);
        cells.insert({bx, by});
        CHECK(p.x >= lo_x);
        CHECK(p.x <= hi_x);
        CHECK(p.y >= lo_y);
        CHECK(p.y <= hi_y);
    }
    CHECK(cells.size() >= 58);  // >= 90% of the 64 cells
}

TEST_CASE("corner_patches: flush placement at 1000x1000 with 388 patches") {
    SamplerConfig cfg;
    cfg.patch_w = cfg.patch_h = 388;
    const auto specs = corner_patches(1000, 1000, cfg);
    REQUIRE(specs.size() == 4);
    CHECK(specs[0] == PatchSpec{0, 0, 388, 388});
    CHECK(specs[1] == PatchSpec{612, 0, 388, 388});
    CHECK(specs[2] == PatchSpec{0, 612, 388, 388});
    CHECK(specs[3] == PatchSpec{612, 612, 388, 388});
}

TEST_CASE("corner_patches: an exactly patch-sized image deduplicates to one") {
    SamplerConfig cfg;
    cfg.patch_w = cfg.patch_h = 64;
    const auto specs = corner_patches(64, 64, cfg);
    CHECK(specs.size() == 1);
    CHECK(specs[0] == PatchSpec{0, 0, 64, 64});
    CHECK_THROWS_AS(corner_patches(63, 64, cfg), ShapeError);
}

TEST_CASE("corner_patches stay in bounds for random image sizes") {
    Rng rng(11);
    SamplerConfig cfg;
    cfg.patch_w = 50;
    cfg.patch_h = 40;
    for (int trial = 0; trial < 30; ++trial) {
        const int w = 50 + static_cast<int>(rng.next_index(300));
        const int h = 40 + static_cast<int>(rng.next_index(300));
        for (const auto& p : corner_patches(w, h, cfg)) {
            CHECK(p.x >= 0);
            CHECK(p.y >= 0);
            CHECK(p.x + p.w <= w);
            CHECK(p.y + p.h <= h);
        }
    }
}

TEST_CASE("tiling: exact fit gives a non-overlapping grid") {
    const auto tiles = tiling(776, 776, 388, 388);
    CHECK(tiles.size() == 4);
    CHECK(tiles[0] == PatchSpec{0, 0, 388, 388});
    CHECK(tiles[3] == PatchSpec{388, 388, 388, 388});
}

TEST_CASE("tiling: 800x800 with 388 patches gives 3x3 tiles, last row/col at 412") {
    const auto tiles = tiling(800, 800, 388, 388);
    REQUIRE(tiles.size() == 9);
    CHECK(tiles[2].x == 412);
    CHECK(tiles[8] == PatchSpec{412, 412, 388, 388});
}

TEST_CASE("tiling covers every pixel (random sizes)") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const int pw = 20 + static_cast<int>(rng.next_index(60));
        const int ph = 20 + static_cast<int>(rng.next_index(60));
        const int w = pw + static_cast<int>(rng.next_index(200));
        const int h = ph + static_cast<int>(rng.next_index(200));
        const auto tiles = tiling(w, h, pw, ph);
        std::vector<std::uint8_t> covered(static_cast<std::size_t>(w) * h, 0);
        for (const auto& t : tiles) {
            CHECK(t.x >= 0);
            CHECK(t.y >= 0);
            CHECK(t.x + t.w <= w);
            CHECK(t.y + t.h <= h);
            for (int y = t.y; y < t.y + t.h; ++y) {
                for (int x = t.x; x < t.x + t.w; ++x) covered[static_cast<std::size_t>(y) * w + x] = 1;
            }
        }
        for (std::uint8_t c : covered) CHECK(c == 1);
    }
}

TEST_CASE("tiling: image smaller than the patch clamps to a single tile") {
    const auto tiles = tiling(40, 30, 100, 100);
    REQUIRE(tiles.size() == 1);
    CHECK(tiles[0] == PatchSpec{0, 0, 40, 30});
}

TEST_CASE("reflect_index: [1,2,3] left-extended by 2 reads 3,2") {
    // indices -2,-1,0,1,2 -> values 3,2,1,2,3
    const std::vector<float> row = {1.f, 2.f, 3.f};
    std::vector<float> extended;
    for (int i = -2; i <= 2; ++i) extended.push_back(row[static_cast<std::size_t>(reflect_index(i, 3))]);
    CHECK(extended == std::vector<float>{3.f, 2.f, 1.f, 2.f, 3.f});
}

TEST_CASE("reflect_index matches the explicit folding oracle, including huge overshoot") {
    for (int n : {1, 2, 3, 7}) {
        for (int i = -40; i <= 40; ++i) {
            CHECK(reflect_index(i, n) == oracle::reflect_ref(i, n));
        }
    }
}

TEST_CASE("extract: interior patches are plain crops") {
    Rng rng(17);
    Tensor img({3, 30, 30});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(rng.next_real01());
    const PatchSpec spec{10, 8, 12, 14};
    const Tensor out = extract(img, spec, 4);
    CHECK(out.shape() == Shape{3, 14 + 8, 12 + 8});
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 22; ++y) {
            for (int x = 0; x < 20; ++x) {
                CHECK(out.at(c, y, x) == img.at(c, spec.y - 4 + y, spec.x - 4 + x));
            }
        }
    }
}

TEST_CASE("extract: corner patch of a 10x10 image with margin 92 matches the reflected-index oracle") {
    Rng rng(19);
    Tensor img({3, 10, 10});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(rng.next_real01());
    const PatchSpec spec{0, 0, 10, 10};
    const int margin = 92;
    const Tensor out = extract(img, spec, margin);
    REQUIRE(out.shape() == Shape{3, 194, 194});
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 194; ++y) {
            for (int x = 0; x < 194; ++x) {
                const int sy = oracle::reflect_ref(y - margin, 10);
                const int sx = oracle::reflect_ref(x - margin, 10);
                CHECK(out.at(c, y, x) == img.at(c, sy, sx));
            }
        }
    }
}

TEST_CASE("extract rejects out-of-bounds output rectangles") {
    Tensor img({3, 10, 10});
    CHECK_THROWS_AS(extract(img, PatchSpec{5, 5, 10, 10}, 0), ShapeError);
    CHECK_THROWS_AS(extract(img, PatchSpec{-1, 0, 5, 5}, 0), ShapeError);
}

}  // TEST_SUITE
