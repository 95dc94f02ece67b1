#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "mammo/core/raster.hpp"
#include "mammo/error.hpp"

namespace mammo {

/// Axis-aligned box in pixel coordinates, half-open on the max edges, so
/// area = (x_max - x_min) * (y_max - y_min).
struct BBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 1;
    int y_max = 1;

    bool valid() const noexcept { return x_min < x_max && y_min < y_max; }
    std::int64_t width() const noexcept { return std::int64_t{x_max} - x_min; }
    std::int64_t height() const noexcept { return std::int64_t{y_max} - y_min; }
    std::int64_t area() const noexcept { return width() * height(); }

    BBox translated(int dx, int dy) const noexcept {
        return {x_min + dx, y_min + dy, x_max + dx, y_max + dy};
    }

    friend auto operator<=>(const BBox&, const BBox&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const BBox& b) {
    return os << "(" << b.x_min << "," << b.y_min << "," << b.x_max << "," << b.y_max << ")";
}

inline BBox make_bbox(int x_min, int y_min, int x_max, int y_max) {
    BBox b{x_min, y_min, x_max, y_max};
    if (!b.valid()) {
        throw ParameterError("box must have positive area: (" + std::to_string(x_min) + "," +
                             std::to_string(y_min) + "," + std::to_string(x_max) + "," +
                             std::to_string(y_max) + ")");
    }
    return b;
}

inline std::int64_t intersection_area(const BBox& a, const BBox& b) noexcept {
    const std::int64_t w = std::int64_t{std::min(a.x_max, b.x_max)} - std::max(a.x_min, b.x_min);
    const std::int64_t h = std::int64_t{std::min(a.y_max, b.y_max)} - std::max(a.y_min, b.y_min);
    return (w > 0 && h > 0) ? w * h : 0;
}

/// Intersection over union; 0 for disjoint boxes.
inline double iou(const BBox& a, const BBox& b) noexcept {
    const std::int64_t inter = intersection_area(a, b);
    if (inter == 0) return 0.0;
    const std::int64_t uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Tight bounding box of the set pixels, or nullopt for an empty mask.
inline std::optional<BBox> tight_bbox(const BinaryMask& mask) {
    int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.test(x, y)) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) return std::nullopt;
    return BBox{x0, y0, x1 + 1, y1 + 1};
}

/// Filled rectangle mask, clipped to the raster.
inline BinaryMask box_mask(int width, int height, const BBox& box) {
    BinaryMask m(width, height);
    for (int y = std::max(0, box.y_min); y < std::min(height, box.y_max); ++y) {
        for (int x = std::max(0, box.x_min); x < std::min(width, box.x_max); ++x) m.set(x, y);
    }
    return m;
}

/// Intersection with the [0,width)x[0,height) frame, nullopt if nothing remains.
inline std::optional<BBox> clip_bbox(const BBox& box, int width, int height) {
    BBox c{std::max(box.x_min, 0), std::max(box.y_min, 0), std::min(box.x_max, width),
           std::min(box.y_max, height)};
    if (!c.valid()) return std::nullopt;
    return c;
}

template <class R>
R crop(const R& img, const BBox& region) {
    if (region.x_min < 0 || region.y_min < 0 || region.x_max > img.width() ||
        region.y_max > img.height() || !region.valid()) {
        throw ParameterError("crop region outside raster");
    }
    using T = typename R::value_type;
    std::vector<T> px;
    px.reserve(static_cast<std::size_t>(region.area()));
    for (int y = region.y_min; y < region.y_max; ++y) {
        for (int x = region.x_min; x < region.x_max; ++x) px.push_back(img.at(x, y));
    }
    if constexpr (std::is_same_v<R, GrayImage>) {
        return GrayImage(static_cast<int>(region.width()), static_cast<int>(region.height()),
                         img.bit_depth(), std::move(px));
    } else if constexpr (std::is_same_v<R, BinaryMask>) {
        BinaryMask m(static_cast<int>(region.width()), static_cast<int>(region.height()));
        std::copy(px.begin(), px.end(), m.pixels().begin());
        return m;
    } else {
        return R(static_cast<int>(region.width()), static_cast<int>(region.height()), std::move(px));
    }
}

}  // namespace mammo
