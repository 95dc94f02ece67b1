#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mammo/core/raster.hpp"
#include "mammo/error.hpp"
#include "mammo/io/image_io.hpp"

namespace mammo {

/// Contrast-limited adaptive histogram equalization settings.
///
/// `clip_limit` is a fraction of a tile's pixel count: a tile of N pixels
/// clips each histogram bin at clip_limit * N (never below one count).
struct ClaheConfig {
    int tiles_x = 8;
    int tiles_y = 8;
    double clip_limit = 0.01;
    int bins = 256;

    void validate() const {
        if (tiles_x < 1 || tiles_y < 1) throw ParameterError("CLAHE tile grid must be at least 1x1");
        if (bins < 2) throw ParameterError("CLAHE needs at least 2 histogram bins");
        if (!(clip_limit > 0.0 && clip_limit <= 1.0)) {
            throw ParameterError("CLAHE clip limit must lie in (0, 1]");
        }
    }
};

inline constexpr double kClipLimitLow = 0.01;
inline constexpr double kClipLimitHigh = 0.02;

namespace detail {

struct TileAxis {
    std::vector<int> start;     // first pixel of each tile
    std::vector<int> stop;      // one past the last pixel
    std::vector<double> center;
};

inline TileAxis split_axis(int length, int tiles) {
    TileAxis a;
    for (int i = 0; i < tiles; ++i) {
        const int s = static_cast<int>(static_cast<std::int64_t>(i) * length / tiles);
        const int e = static_cast<int>(static_cast<std::int64_t>(i + 1) * length / tiles);
        a.start.push_back(s);
        a.stop.push_back(e);
        a.center.push_back((s + e - 1) / 2.0);
    }
    return a;
}

// Interpolation partners along one axis: (lower tile, upper tile, weight of upper).
struct AxisWeight {
    int lo = 0;
    int hi = 0;
    double w = 0.0;
};

inline AxisWeight axis_weight(const TileAxis& a, int pos) {
    const int last = static_cast<int>(a.center.size()) - 1;
    if (pos <= a.center.front()) return {0, 0, 0.0};
    if (pos >= a.center[last]) return {last, last, 0.0};
    int i = 0;
    while (i + 1 <= last && a.center[i + 1] <= pos) ++i;
    const double w = (pos - a.center[i]) / (a.center[i + 1] - a.center[i]);
    return {i, i + 1, w};
}

}  // namespace detail

/// CLAHE on a [0, 1] image.
///
/// Histogram bins span the image's own intensity range [lo, hi], and every
/// tile mapping sends that range onto itself:
///   map(b) = lo + (hi - lo) * cdf_clipped(b) / N_tile.
/// A constant image is therefore returned unchanged, and a fully clipped
/// (flat) histogram reproduces the input to within one bin plus
/// bins / N_tile. Excess counts
/// removed by clipping are spread uniformly over all bins in one pass.
/// Pixels blend the mappings of the (up to) four nearest tile centres;
/// pixels outside the outermost centres fall back to two or one mapping.
inline FloatImage clahe(const FloatImage& img, const ClaheConfig& cfg) {
    cfg.validate();
    const int w = img.width(), h = img.height();
    if (w < cfg.tiles_x || h < cfg.tiles_y) {
        throw ParameterError("CLAHE: image " + std::to_string(w) + "x" + std::to_string(h) +
                             " is smaller than the " + std::to_string(cfg.tiles_x) + "x" +
                             std::to_string(cfg.tiles_y) + " tile grid");
    }
    const auto [mn, mx] = std::minmax_element(img.pixels().begin(), img.pixels().end());
    const double lo = *mn, hi = *mx;
    if (!(lo >= 0.0 && hi <= 1.0)) throw ParameterError("CLAHE input must lie in [0, 1]");
    if (hi <= lo) return img;

    const int bins = cfg.bins;
    const double span = hi - lo;
    std::vector<int> bin_of(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const auto b = static_cast<int>(std::floor((img[i] - lo) / span * bins));
        bin_of[i] = std::clamp(b, 0, bins - 1);
    }

    const auto ax = detail::split_axis(w, cfg.tiles_x);
    const auto ay = detail::split_axis(h, cfg.tiles_y);

    // maps[(ty * tiles_x + tx) * bins + b]
    std::vector<double> maps(static_cast<std::size_t>(cfg.tiles_x) * cfg.tiles_y * bins);
    std::vector<double> hist(bins);
    for (int ty = 0; ty < cfg.tiles_y; ++ty) {
        for (int tx = 0; tx < cfg.tiles_x; ++tx) {
            std::fill(hist.begin(), hist.end(), 0.0);
            for (int y = ay.start[ty]; y < ay.stop[ty]; ++y) {
                for (int x = ax.start[tx]; x < ax.stop[tx]; ++x) {
                    hist[bin_of[static_cast<std::size_t>(y) * w + x]] += 1.0;
                }
            }
            const double n = static_cast<double>(ax.stop[tx] - ax.start[tx]) *
                             static_cast<double>(ay.stop[ty] - ay.start[ty]);
            const double limit = std::max(1.0, cfg.clip_limit * n);
            double excess = 0.0;
            for (auto& c : hist) {
                if (c > limit) {
                    excess += c - limit;
                    c = limit;
                }
            }
            const double share = excess / bins;
            double cdf = 0.0;
            double* map = &maps[(static_cast<std::size_t>(ty) * cfg.tiles_x + tx) * bins];
            for (int b = 0; b < bins; ++b) {
                cdf += hist[b] + share;
                map[b] = lo + span * std::min(1.0, cdf / n);
            }
        }
    }

    FloatImage out(w, h);
    std::vector<detail::AxisWeight> wx(w);
    for (int x = 0; x < w; ++x) wx[x] = detail::axis_weight(ax, x);
    for (int y = 0; y < h; ++y) {
        const auto wy = detail::axis_weight(ay, y);
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const int b = bin_of[i];
            const auto lookup = [&](int tx, int ty) {
                return maps[(static_cast<std::size_t>(ty) * cfg.tiles_x + tx) * bins + b];
            };
            const auto& cx = wx[x];
            const double top = (1.0 - cx.w) * lookup(cx.lo, wy.lo) + cx.w * lookup(cx.hi, wy.lo);
            const double bottom = (1.0 - cx.w) * lookup(cx.lo, wy.hi) + cx.w * lookup(cx.hi, wy.hi);
            out[i] = static_cast<float>(std::clamp((1.0 - wy.w) * top + wy.w * bottom, lo, hi));
        }
    }
    return out;
}

/// Network input planes: [0] the normalized image, [1] CLAHE at clip 0.01,
/// [2] CLAHE at clip 0.02.
struct ThreeChannelImage {
    std::array<FloatImage, 3> channels;

    int width() const noexcept { return channels[0].width(); }
    int height() const noexcept { return channels[0].height(); }
};

inline ThreeChannelImage synthesize_channels(const FloatImage& norm, int tiles_x = 8, int tiles_y = 8,
                                             int bins = 256) {
    ClaheConfig low{tiles_x, tiles_y, kClipLimitLow, bins};
    ClaheConfig high{tiles_x, tiles_y, kClipLimitHigh, bins};
    return ThreeChannelImage{{norm, clahe(norm, low), clahe(norm, high)}};
}

/// (norm, clahe 0.01, clahe 0.02) -> (R, G, B), each round(v * 255).
inline io::Rgb8Image to_rgb8(const ThreeChannelImage& img) {
    io::Rgb8Image out{img.width(), img.height(), {}};
    out.interleaved.resize(static_cast<std::size_t>(img.width()) * img.height() * 3);
    for (std::size_t i = 0; i < img.channels[0].size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const double v = std::clamp(static_cast<double>(img.channels[c][i]), 0.0, 1.0);
            out.interleaved[3 * i + c] = static_cast<std::uint8_t>(v * 255.0 + 0.5);
        }
    }
    return out;
}

inline ThreeChannelImage from_rgb8(const io::Rgb8Image& img) {
    ThreeChannelImage out;
    for (auto& ch : out.channels) ch = FloatImage(img.width, img.height);
    for (std::size_t i = 0; i < out.channels[0].size(); ++i) {
        for (int c = 0; c < 3; ++c) out.channels[c][i] = img.interleaved[3 * i + c] / 255.0f;
    }
    return out;
}

}  // namespace mammo
