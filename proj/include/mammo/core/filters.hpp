#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "mammo/core/raster.hpp"
#include "mammo/error.hpp"

namespace mammo {

/// Normalized 1-D Gaussian taps for offsets -r..r with r = ceil(3 * sigma).
inline std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ParameterError("gaussian sigma must be positive, got " + std::to_string(sigma));
    }
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        sum += taps[i + radius];
    }
    for (auto& t : taps) t /= sum;
    return taps;
}

namespace detail {

// Separable convolution with replicated borders, accumulated in double.
template <class T>
std::vector<double> convolve_separable(const Raster<T>& img, const std::vector<double>& taps) {
    const int w = img.width(), h = img.height();
    const int r = static_cast<int>(taps.size() / 2);
    std::vector<double> tmp(img.size()), out(img.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                acc += taps[k + r] * static_cast<double>(img.clamped(x + k, y));
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k) {
                const int yy = std::clamp(y + k, 0, h - 1);
                acc += taps[k + r] * tmp[static_cast<std::size_t>(yy) * w + x];
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

}  // namespace detail

/// Gaussian blur; output keeps shape and bit depth, rounded to the nearest
/// integer intensity.
inline GrayImage gaussian_filter(const GrayImage& img, double sigma) {
    const auto taps = gaussian_kernel(sigma);
    if (img.empty()) return img;
    const auto acc = detail::convolve_separable(img, taps);
    GrayImage out(img.width(), img.height(), img.bit_depth());
    const double top = img.max_value();
    for (std::size_t i = 0; i < acc.size(); ++i) {
        out[i] = static_cast<std::uint16_t>(std::clamp(std::round(acc[i]), 0.0, top));
    }
    return out;
}

inline FloatImage gaussian_filter(const FloatImage& img, double sigma) {
    const auto taps = gaussian_kernel(sigma);
    if (img.empty()) return img;
    const auto acc = detail::convolve_separable(img, taps);
    FloatImage out(img.width(), img.height());
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i]);
    return out;
}

/// Bilinear interpolation; coordinates outside the raster clamp to the border.
inline double bilinear_sample(const FloatImage& img, double x, double y) {
    if (img.empty()) throw ParameterError("bilinear_sample on empty image");
    x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = x - x0, fy = y - y0;
    const double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
    const double bottom = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
    return (1.0 - fy) * top + fy * bottom;
}

/// Dilation by a disc {(dx, dy) : dx^2 + dy^2 <= radius^2}. Radius 0 is the identity.
inline BinaryMask dilate(const BinaryMask& mask, int radius) {
    if (radius < 0) throw ParameterError("dilation radius must be >= 0");
    if (radius == 0 || mask.empty()) return mask;
    const int w = mask.width(), h = mask.height();

    // Per-row horizontal dilation for every half-width the disc needs,
    // via prefix counts, then OR the shifted rows together.
    std::vector<int> half(2 * radius + 1);
    for (int dy = -radius; dy <= radius; ++dy) {
        half[dy + radius] = static_cast<int>(std::floor(std::sqrt(
            static_cast<double>(radius) * radius - static_cast<double>(dy) * dy)));
    }
    std::vector<int> prefix(static_cast<std::size_t>(w) + 1);
    std::vector<std::vector<std::uint8_t>> horiz(radius + 1, std::vector<std::uint8_t>(mask.size()));
    for (int y = 0; y < h; ++y) {
        prefix[0] = 0;
        for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + (mask.test(x, y) ? 1 : 0);
        for (int hw = 0; hw <= radius; ++hw) {
            for (int x = 0; x < w; ++x) {
                const int lo = std::max(0, x - hw), hi = std::min(w, x + hw + 1);
                horiz[hw][static_cast<std::size_t>(y) * w + x] = prefix[hi] - prefix[lo] > 0;
            }
        }
    }
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool hit = false;
            for (int dy = -radius; dy <= radius && !hit; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                hit = horiz[half[dy + radius]][static_cast<std::size_t>(yy) * w + x] != 0;
            }
            out.set(x, y, hit);
        }
    }
    return out;
}

/// Set pixels that have at least one 4-neighbour outside the set (or the frame).
inline BinaryMask inner_boundary(const BinaryMask& mask) {
    BinaryMask out(mask.width(), mask.height());
    constexpr std::array<std::array<int, 2>, 4> nb{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.test(x, y)) continue;
            for (const auto& d : nb) {
                const int xx = x + d[0], yy = y + d[1];
                if (!mask.contains(xx, yy) || !mask.test(xx, yy)) {
                    out.set(x, y);
                    break;
                }
            }
        }
    }
    return out;
}

/// Connected-component labels with 8-connectivity. Labels are 1-based in
/// raster order of each component's first pixel; 0 is background.
struct ComponentLabels {
    Raster<std::int32_t> labels;
    std::vector<std::size_t> sizes;  // sizes[k] is the pixel count of label k + 1
};

inline ComponentLabels label_components(const BinaryMask& mask) {
    ComponentLabels result{Raster<std::int32_t>(mask.width(), mask.height(), 0), {}};
    auto& labels = result.labels;
    std::deque<std::pair<int, int>> queue;
    std::int32_t next = 0;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.test(x, y) || labels.at(x, y) != 0) continue;
            const std::int32_t label = ++next;
            std::size_t count = 0;
            labels.at(x, y) = label;
            queue.emplace_back(x, y);
            while (!queue.empty()) {
                const auto [cx, cy] = queue.front();
                queue.pop_front();
                ++count;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (!mask.contains(nx, ny) || !mask.test(nx, ny) || labels.at(nx, ny) != 0) {
                            continue;
                        }
                        labels.at(nx, ny) = label;
                        queue.emplace_back(nx, ny);
                    }
                }
            }
            result.sizes.push_back(count);
        }
    }
    return result;
}

/// Keeps only the 8-connected component with the most pixels. Equal sizes
/// resolve to the component met first in raster order.
inline BinaryMask largest_connected_component(const BinaryMask& mask) {
    const auto comps = label_components(mask);
    if (comps.sizes.empty()) throw DegenerateInputError("mask has no foreground pixels");
    std::size_t best = 0;
    for (std::size_t k = 1; k < comps.sizes.size(); ++k) {
        if (comps.sizes[k] > comps.sizes[best]) best = k;
    }
    const auto keep = static_cast<std::int32_t>(best + 1);
    BinaryMask out(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) out[i] = comps.labels[i] == keep ? 1 : 0;
    return out;
}

}  // namespace mammo
