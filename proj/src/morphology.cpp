#include "dcpa/morphology.hpp"

#include <cstdint>
#include <vector>

namespace dcpa {

SegMask largest_component(const SegMask& mask) {
    const int h = mask.h, w = mask.w;
    std::vector<std::int32_t> label(mask.size(), -1);
    std::vector<std::int64_t> areas;
    std::vector<std::size_t> stack;

    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (!mask.data[start] || label[start] >= 0) continue;
        const std::int32_t id = static_cast<std::int32_t>(areas.size());
        std::int64_t area = 0;
        stack.push_back(start);
        label[start] = id;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            ++area;
            const int y = static_cast<int>(i) / w;
            const int x = static_cast<int>(i) % w;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    const int ny = y + dy, nx = x + dx;
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                    if (mask.data[ni] && label[ni] < 0) {
                        label[ni] = id;
                        stack.push_back(ni);
                    }
                }
            }
        }
        areas.push_back(area);
    }

    SegMask out(h, w);
    if (areas.empty()) return out;
    // Components are discovered in row-major order of their first pixel, so
    // strict > keeps the earliest on ties.
    std::int32_t best = 0;
    for (std::int32_t id = 1; id < static_cast<std::int32_t>(areas.size()); ++id) {
        if (areas[static_cast<std::size_t>(id)] > areas[static_cast<std::size_t>(best)]) best = id;
    }
    for (std::size_t i = 0; i < mask.size(); ++i) out.data[i] = label[i] == best ? 1 : 0;
    return out;
}

SegMask fill_holes(const SegMask& mask) {
    const int h = mask.h, w = mask.w;
    std::vector<std::uint8_t> outside(mask.size(), 0);
    std::vector<std::size_t> stack;
    auto push = [&](int y, int x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (!mask.data[i] && !outside[i]) {
            outside[i] = 1;
            stack.push_back(i);
        }
    };
    for (int x = 0; x < w; ++x) {
        push(0, x);
        push(h - 1, x);
    }
    for (int y = 0; y < h; ++y) {
        push(y, 0);
        push(y, w - 1);
    }
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int y = static_cast<int>(i) / w;
        const int x = static_cast<int>(i) % w;
        if (y > 0) push(y - 1, x);
        if (y + 1 < h) push(y + 1, x);
        if (x > 0) push(y, x - 1);
        if (x + 1 < w) push(y, x + 1);
    }
    SegMask out(h, w);
    for (std::size_t i = 0; i < mask.size(); ++i) out.data[i] = (mask.data[i] || !outside[i]) ? 1 : 0;
    return out;
}

}  // namespace dcpa
