#include <doctest.h>

#include "dcpa/metrics.hpp"
#include "dcpa/morphology.hpp"
#include "dcpa/rng.hpp"
#include "oracles.hpp"

using namespace dcpa;

namespace {

SegMask random_noise_mask(int h, int w, Rng& rng, double density) {
    SegMask m(h, w);
    for (auto& v : m.data) v = rng.next_real01() < density ? 1 : 0;
    return m;
}

bool equal_masks(const SegMask& a, const SegMask& b) {
    return same_size(a, b) && a.data == b.data;
}

}  // namespace

TEST_SUITE("morph_metrics") {

TEST_CASE("largest_component: only the bigger blob survives") {
    SegMask m(20, 20);
    for (int y = 2; y < 12; ++y) {
        for (int x = 2; x < 7; ++x) m.at(y, x) = 1;  // 50 px
    }
    for (int y = 15; y < 16; ++y) {
        for (int x = 10; x < 17; ++x) m.at(y, x) = 1;  // 7 px
    }
    const SegMask out = largest_component(m);
    CHECK(out.positive_count() == 50);
    CHECK(out.at(3, 3) == 1);
    CHECK(out.at(15, 12) == 0);
}

TEST_CASE("largest_component: single blob passes through, empty stays empty") {
    SegMask m(8, 8);
    for (int y = 1; y < 4; ++y) {
        for (int x = 1; x < 4; ++x) m.at(y, x) = 1;
    }
    CHECK(equal_masks(largest_component(m), m));
    const SegMask empty(5, 5);
    CHECK(largest_component(empty).positive_count() == 0);
}

TEST_CASE("largest_component: ties keep the first component in row-major order") {
    SegMask m(6, 10);
    m.at(0, 0) = m.at(0, 1) = 1;  // first two-pixel blob
    m.at(4, 6) = m.at(4, 7) = 1;  // second two-pixel blob
    const SegMask out = largest_component(m);
    CHECK(out.at(0, 0) == 1);
    CHECK(out.at(4, 6) == 0);
}

TEST_CASE("largest_component: 8-connectivity joins diagonals") {
    SegMask m(4, 4);
    m.at(0, 0) = m.at(1, 1) = m.at(2, 2) = 1;
    m.at(3, 0) = 1;
    const SegMask out = largest_component(m);
    CHECK(out.positive_count() == 3);
}

TEST_CASE("largest_component agrees with the union-find oracle on 100 random masks") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const SegMask m = random_noise_mask(64, 64, rng, 0.35);
        CHECK(equal_masks(largest_component(m), oracle::largest_component_ref(m)));
    }
}

TEST_CASE("fill_holes: a ring becomes a solid disc") {
    SegMask m(16, 16);
    for (int y = 3; y < 13; ++y) {
        for (int x = 3; x < 13; ++x) {
            const bool edge = y == 3 || y == 12 || x == 3 || x == 12;
            if (edge) m.at(y, x) = 1;
        }
    }
    const SegMask out = fill_holes(m);
    for (int y = 3; y < 13; ++y) {
        for (int x = 3; x < 13; ++x) CHECK(out.at(y, x) == 1);
    }
    CHECK(out.at(0, 0) == 0);
}

TEST_CASE("fill_holes: a region open to the border stays open") {
    // C-shape: the cavity connects to the border's background via a channel
    SegMask m(10, 10);
    for (int y = 2; y < 8; ++y) {
        for (int x = 2; x < 8; ++x) {
            const bool edge = y == 2 || y == 7 || x == 2 || x == 7;
            if (edge) m.at(y, x) = 1;
        }
    }
    m.at(2, 4) = 0;  // breach the top wall
    const SegMask out = fill_holes(m);
    CHECK(out.at(4, 4) == 0);
}

TEST_CASE("fill_holes agrees with the background-labeling oracle on random masks") {
    Rng rng(22);
    for (int trial = 0; trial < 100; ++trial) {
        const SegMask m = random_noise_mask(64, 64, rng, 0.45);
        CHECK(equal_masks(fill_holes(m), oracle::fill_holes_ref(m)));
    }
}

TEST_CASE("morphology idempotence and area monotonicity") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const SegMask m = random_noise_mask(48, 48, rng, 0.4);
        const SegMask lc = largest_component(m);
        CHECK(equal_masks(largest_component(lc), lc));
        CHECK(lc.positive_count() <= m.positive_count());
        const SegMask fh = fill_holes(m);
        CHECK(equal_masks(fill_holes(fh), fh));
        CHECK(fh.positive_count() >= m.positive_count());
    }
}

TEST_CASE("confusion: TP=3, FP=1, FN=1 gives P=R=F1=0.75, overlap=0.6") {
    SegMask pred(2, 3), truth(2, 3);
    // 3 TP, 1 FP, 1 FN, 1 TN
    pred.at(0, 0) = pred.at(0, 1) = pred.at(0, 2) = truth.at(0, 0) = truth.at(0, 1) = truth.at(0, 2) = 1;
    pred.at(1, 0) = 1;   // FP
    truth.at(1, 1) = 1;  // FN
    const ConfusionCounts c = confusion(pred, truth);
    CHECK(c.tp == 3);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 1);
    CHECK(c.total() == 6);
    const MetricsReport r = metrics(c);
    CHECK(r.precision == doctest::Approx(0.75));
    CHECK(r.recall == doctest::Approx(0.75));
    CHECK(r.f1 == doctest::Approx(0.75));
    CHECK(r.overlap == doctest::Approx(0.6));
    CHECK(!r.degenerate);
}

TEST_CASE("confusion: perfect prediction scores all ones") {
    Rng rng(24);
    const SegMask m = random_noise_mask(16, 16, rng, 0.3);
    const MetricsReport r = metrics(confusion(m, m));
    CHECK(r.precision == 1.0);
    CHECK(r.recall == 1.0);
    CHECK(r.f1 == 1.0);
    CHECK(r.overlap == 1.0);
}

TEST_CASE("confusion matches a four-way pixel tally oracle") {
    Rng rng(25);
    for (int trial = 0; trial < 100; ++trial) {
        const SegMask a = random_noise_mask(32, 32, rng, 0.4);
        const SegMask b = random_noise_mask(32, 32, rng, 0.4);
        const ConfusionCounts c = confusion(a, b);
        std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            tp += (a.data[i] && b.data[i]);
            fp += (a.data[i] && !b.data[i]);
            fn += (!a.data[i] && b.data[i]);
            tn += (!a.data[i] && !b.data[i]);
        }
        CHECK(c.tp == tp);
        CHECK(c.fp == fp);
        CHECK(c.fn == fn);
        CHECK(c.tn == tn);
        CHECK(c.total() == 32 * 32);
    }
}

TEST_CASE("overlap never exceeds F1") {
    Rng rng(26);
    for (int trial = 0; trial < 200; ++trial) {
        ConfusionCounts c;
        c.tp = 1 + rng.next_index(100);
        c.fp = rng.next_index(100);
        c.fn = rng.next_index(100);
        c.tn = rng.next_index(100);
        const MetricsReport r = metrics(c);
        CHECK(r.overlap <= r.f1 + 1e-12);
    }
}

TEST_CASE("degenerate 0/0 ratios report 0 with the flag set") {
    ConfusionCounts c;
    c.tn = 100;
    const MetricsReport r = metrics(c);
    CHECK(r.precision == 0.0);
    CHECK(r.recall == 0.0);
    CHECK(r.f1 == 0.0);
    CHECK(r.overlap == 0.0);
    CHECK(r.degenerate);
}

TEST_CASE("confusion rejects size mismatches") {
    CHECK_THROWS_AS(confusion(SegMask(3, 3), SegMask(3, 4)), ShapeError);
}

}  // TEST_SUITE
