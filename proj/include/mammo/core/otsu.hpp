#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "mammo/core/raster.hpp"
#include "mammo/error.hpp"

namespace mammo {

inline constexpr int kOtsuBins = 256;

using Histogram256 = std::array<std::uint64_t, kOtsuBins>;

/// 256-bin histogram; 16-bit images are quantized by dropping the low byte.
inline Histogram256 histogram256(const GrayImage& img) {
    Histogram256 hist{};
    const int shift = img.bit_depth() - 8;
    for (auto v : img.pixels()) ++hist[v >> shift];
    return hist;
}

namespace detail {
__extension__ typedef unsigned __int128 u128;
__extension__ typedef __int128 i128;
}  // namespace detail

/// Otsu's threshold over a 256-bin histogram: the bin t in [0, 254] that
/// maximizes between-class variance when class 0 is bins [0, t] and class 1
/// is bins (t, 255]. The smallest maximizer wins.
///
/// With n0, s0 the count and intensity sum of class 0 and n, s the totals,
/// the between-class variance is proportional to
///   (n * s0 - n0 * s)^2 / (n0 * (n - n0)),
/// which is evaluated from exact integer sums.
inline int otsu_threshold(std::span<const std::uint64_t, kOtsuBins> hist) {
    std::uint64_t n = 0;
    detail::u128 s = 0;
    int occupied = 0;
    for (int b = 0; b < kOtsuBins; ++b) {
        n += hist[b];
        s += static_cast<detail::u128>(hist[b]) * b;
        occupied += hist[b] != 0;
    }
    if (occupied < 2) {
        throw DegenerateInputError("otsu: histogram has fewer than two occupied bins");
    }

    std::uint64_t n0 = 0;
    detail::u128 s0 = 0;
    long double best = -1.0L;
    int best_t = 0;
    for (int t = 0; t < kOtsuBins - 1; ++t) {
        n0 += hist[t];
        s0 += static_cast<detail::u128>(hist[t]) * t;
        const std::uint64_t n1 = n - n0;
        if (n0 == 0 || n1 == 0) continue;
        const detail::i128 diff = static_cast<detail::i128>(s0 * n) - static_cast<detail::i128>(s * n0);
        const long double d = static_cast<long double>(diff);
        const long double score = d * d / (static_cast<long double>(n0) * static_cast<long double>(n1));
        if (score > best) {
            best = score;
            best_t = t;
        }
    }
    return best_t;
}

inline int otsu_threshold(const Histogram256& hist) {
    return otsu_threshold(std::span<const std::uint64_t, kOtsuBins>(hist));
}

/// Image-level threshold expressed in the image's own intensity scale:
/// pixels with value > the returned threshold are foreground.
inline std::uint16_t otsu_threshold(const GrayImage& img) {
    const int bin = otsu_threshold(histogram256(img));
    const int shift = img.bit_depth() - 8;
    return static_cast<std::uint16_t>(((bin + 1) << shift) - 1);
}

inline BinaryMask binarize_above(const GrayImage& img, std::uint16_t threshold) {
    BinaryMask out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i] > threshold ? 1 : 0;
    return out;
}

}  // namespace mammo
