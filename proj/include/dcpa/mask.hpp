#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcpa/errors.hpp"

namespace dcpa {

// Binary 2-D label grid: 1 = optic disc, 0 = background.
struct SegMask {
    int h = 0;
    int w = 0;
    std::vector<std::uint8_t> data;

    SegMask() = default;
    SegMask(int height, int width)
        : h(height), w(width), data(static_cast<std::size_t>(height) * width, 0) {
        if (height <= 0 || width <= 0) {
            throw ShapeError("SegMask: extents must be positive, got " + std::to_string(height) + "x" +
                             std::to_string(width));
        }
    }

    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * w + x]; }
    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * w + x]; }
    std::size_t size() const { return data.size(); }

    std::int64_t positive_count() const {
        std::int64_t n = 0;
        for (std::uint8_t v : data) n += v != 0;
        return n;
    }
};

inline bool same_size(const SegMask& a, const SegMask& b) { return a.h == b.h && a.w == b.w; }

}  // namespace dcpa
