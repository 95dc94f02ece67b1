#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mammo/core/bbox.hpp"
#include "mammo/core/filters.hpp"
#include "mammo/core/raster.hpp"
#include "mammo/enhancement.hpp"

namespace mammo {

inline constexpr int kModelShortSide = 800;
inline constexpr int kModelLongSideCap = 1333;

/// Uniform factor bringing the short side to 800 unless that would push the
/// long side past 1333.
inline double model_input_scale(int width, int height) {
    if (width <= 0 || height <= 0) throw ParameterError("resize: image must be non-empty");
    const double short_side = std::min(width, height);
    const double long_side = std::max(width, height);
    return std::min(kModelShortSide / short_side, kModelLongSideCap / long_side);
}

/// floor(length * scale), with a small tolerance so exact products are not
/// lost to rounding; at least one pixel.
inline int scaled_length(int length, double scale) {
    return std::max(1, static_cast<int>(std::floor(length * scale + 1e-6)));
}

/// Bilinear resize with pixel-centre alignment: output x reads the source at
/// (x + 0.5) / scale - 0.5.
inline FloatImage resize_bilinear(const FloatImage& img, int new_width, int new_height, double scale) {
    FloatImage out(new_width, new_height);
    for (int y = 0; y < new_height; ++y) {
        const double sy = (y + 0.5) / scale - 0.5;
        for (int x = 0; x < new_width; ++x) {
            out.at(x, y) = static_cast<float>(bilinear_sample(img, (x + 0.5) / scale - 0.5, sy));
        }
    }
    return out;
}

inline BinaryMask resize_nearest(const BinaryMask& mask, int new_width, int new_height, double scale) {
    BinaryMask out(new_width, new_height);
    for (int y = 0; y < new_height; ++y) {
        const int sy = std::clamp(static_cast<int>(std::floor((y + 0.5) / scale)), 0, mask.height() - 1);
        for (int x = 0; x < new_width; ++x) {
            const int sx = std::clamp(static_cast<int>(std::floor((x + 0.5) / scale)), 0, mask.width() - 1);
            out.set(x, y, mask.test(sx, sy));
        }
    }
    return out;
}

/// Box corners scaled and rounded to the nearest pixel edge, kept non-empty
/// and inside the resized frame.
inline BBox scale_box(const BBox& b, double scale, int width, int height) {
    const auto edge = [scale](int v) { return static_cast<int>(std::lround(v * scale)); };
    BBox out{edge(b.x_min), edge(b.y_min), edge(b.x_max), edge(b.y_max)};
    out.x_min = std::clamp(out.x_min, 0, width - 1);
    out.y_min = std::clamp(out.y_min, 0, height - 1);
    out.x_max = std::clamp(std::max(out.x_max, out.x_min + 1), out.x_min + 1, width);
    out.y_max = std::clamp(std::max(out.y_max, out.y_min + 1), out.y_min + 1, height);
    return out;
}

template <class Image>
struct Resized {
    Image image;
    std::vector<BBox> boxes;
    double scale = 1.0;
};

inline Resized<FloatImage> resize_for_model(const FloatImage& img, const std::vector<BBox>& boxes) {
    const double s = model_input_scale(img.width(), img.height());
    const int nw = scaled_length(img.width(), s), nh = scaled_length(img.height(), s);
    Resized<FloatImage> out{s == 1.0 ? img : resize_bilinear(img, nw, nh, s), {}, s};
    for (const auto& b : boxes) out.boxes.push_back(s == 1.0 ? b : scale_box(b, s, nw, nh));
    return out;
}

inline Resized<ThreeChannelImage> resize_for_model(const ThreeChannelImage& img,
                                                   const std::vector<BBox>& boxes) {
    const double s = model_input_scale(img.width(), img.height());
    const int nw = scaled_length(img.width(), s), nh = scaled_length(img.height(), s);
    Resized<ThreeChannelImage> out{img, {}, s};
    if (s != 1.0) {
        for (auto& ch : out.image.channels) ch = resize_bilinear(ch, nw, nh, s);
    }
    for (const auto& b : boxes) out.boxes.push_back(s == 1.0 ? b : scale_box(b, s, nw, nh));
    return out;
}

}  // namespace mammo
