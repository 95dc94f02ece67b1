#pragma once

// Fast-marching inpainting (Telea 2004).
//
// Hole pixels are visited in increasing arrival time T of a front that
// starts on the hole boundary (|grad T| = 1). Each pixel p is filled from
// the pixels q within `radius` that already carry a value (original or
// filled earlier):
//
//   I(p) = sum_q w(p,q) * (I(q) + grad I(q) . (p - q)) / sum_q w(p,q)
//   w    = dir * dst * lev
//   dir  = |(p - q) . N(p)| / |p - q|,  N = grad T / |grad T|
//   dst  = 1 / |p - q|^2
//   lev  = 1 / (1 + |T(p) - T(q)|)
//
// The first-order term is clamped to the range of the contributing known
// values so noisy gradients cannot overshoot.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

#include "mammo/core/raster.hpp"
#include "mammo/error.hpp"

namespace mammo {

namespace detail {

enum class FmmFlag : std::uint8_t { Known, Band, Inside };

struct FmmState {
    int w = 0, h = 0;
    std::vector<FmmFlag> flag;
    std::vector<double> t;

    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * w + x; }
    bool in(int x, int y) const { return x >= 0 && y >= 0 && x < w && y < h; }
};

inline constexpr double kFmmInf = 1e12;

// Upwind solution of |grad T| = 1 from two orthogonal neighbours.
inline double eikonal_pair(const FmmState& s, int x1, int y1, int x2, int y2) {
    const bool ok1 = s.in(x1, y1) && s.flag[s.idx(x1, y1)] != FmmFlag::Inside;
    const bool ok2 = s.in(x2, y2) && s.flag[s.idx(x2, y2)] != FmmFlag::Inside;
    if (ok1 && ok2) {
        const double a = s.t[s.idx(x1, y1)], b = s.t[s.idx(x2, y2)];
        const double d = a - b;
        if (std::abs(d) >= 1.0) return 1.0 + std::min(a, b);
        return 0.5 * (a + b + std::sqrt(2.0 - d * d));
    }
    if (ok1) return 1.0 + s.t[s.idx(x1, y1)];
    if (ok2) return 1.0 + s.t[s.idx(x2, y2)];
    return kFmmInf;
}

inline double eikonal(const FmmState& s, int x, int y) {
    return std::min({eikonal_pair(s, x, y - 1, x - 1, y), eikonal_pair(s, x, y - 1, x + 1, y),
                     eikonal_pair(s, x, y + 1, x - 1, y), eikonal_pair(s, x, y + 1, x + 1, y)});
}

// Central difference of T where both sides are reached, one-sided otherwise.
inline std::array<double, 2> time_gradient(const FmmState& s, int x, int y) {
    const auto reached = [&](int xx, int yy) {
        return s.in(xx, yy) && s.flag[s.idx(xx, yy)] != FmmFlag::Inside;
    };
    const double tc = s.t[s.idx(x, y)];
    std::array<double, 2> g{0.0, 0.0};
    const std::array<std::array<int, 2>, 2> axes{{{1, 0}, {0, 1}}};
    for (int a = 0; a < 2; ++a) {
        const int ux = axes[a][0], uy = axes[a][1];
        const bool fwd = reached(x + ux, y + uy), bwd = reached(x - ux, y - uy);
        if (fwd && bwd) {
            g[a] = 0.5 * (s.t[s.idx(x + ux, y + uy)] - s.t[s.idx(x - ux, y - uy)]);
        } else if (fwd) {
            g[a] = s.t[s.idx(x + ux, y + uy)] - tc;
        } else if (bwd) {
            g[a] = tc - s.t[s.idx(x - ux, y - uy)];
        }
    }
    return g;
}

inline std::array<double, 2> image_gradient(const FloatImage& img, const FmmState& s, int x, int y) {
    const auto known = [&](int xx, int yy) {
        return s.in(xx, yy) && s.flag[s.idx(xx, yy)] != FmmFlag::Inside;
    };
    std::array<double, 2> g{0.0, 0.0};
    const std::array<std::array<int, 2>, 2> axes{{{1, 0}, {0, 1}}};
    for (int a = 0; a < 2; ++a) {
        const int ux = axes[a][0], uy = axes[a][1];
        const bool fwd = known(x + ux, y + uy), bwd = known(x - ux, y - uy);
        if (fwd && bwd) {
            g[a] = 0.5 * (img.at(x + ux, y + uy) - img.at(x - ux, y - uy));
        } else if (fwd) {
            g[a] = img.at(x + ux, y + uy) - img.at(x, y);
        } else if (bwd) {
            g[a] = img.at(x, y) - img.at(x - ux, y - uy);
        }
    }
    return g;
}

inline float fill_pixel(const FloatImage& img, const FmmState& s, int x, int y, int radius) {
    const auto grad_t = time_gradient(s, x, y);
    const double gn = std::hypot(grad_t[0], grad_t[1]);
    const double nx = gn > 0.0 ? grad_t[0] / gn : 0.0;
    const double ny = gn > 0.0 ? grad_t[1] / gn : 0.0;
    const double tp = s.t[s.idx(x, y)];

    double num = 0.0, den = 0.0;
    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    for (int qy = y - radius; qy <= y + radius; ++qy) {
        for (int qx = x - radius; qx <= x + radius; ++qx) {
            if (!s.in(qx, qy) || s.flag[s.idx(qx, qy)] == FmmFlag::Inside) continue;
            const double rx = x - qx, ry = y - qy;
            const double d2 = rx * rx + ry * ry;
            if (d2 == 0.0 || d2 > static_cast<double>(radius) * radius) continue;
            const double len = std::sqrt(d2);
            double dir = std::abs(rx * nx + ry * ny) / len;
            if (gn == 0.0) dir = 1.0;
            dir = std::max(dir, 1e-6);
            const double dst = 1.0 / d2;
            const double lev = 1.0 / (1.0 + std::abs(s.t[s.idx(qx, qy)] - tp));
            const double wgt = dir * dst * lev;
            const auto gi = image_gradient(img, s, qx, qy);
            const double v = img.at(qx, qy);
            num += wgt * (v + gi[0] * rx + gi[1] * ry);
            den += wgt;
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    }
    if (den == 0.0) return img.at(x, y);
    return static_cast<float>(std::clamp(num / den, vmin, vmax));
}

}  // namespace detail

/// Fills `hole` from its surroundings by fast marching. Pixels outside the
/// hole are returned bit-identical.
inline FloatImage inpaint_fmm(const FloatImage& img, const BinaryMask& hole, int radius) {
    require_same_shape(img, hole, "inpaint_fmm");
    if (radius < 1) throw ParameterError("inpaint radius must be >= 1");
    const std::size_t holes = hole.count();
    if (holes == 0) return img;
    if (holes == hole.size()) throw NoBoundaryError("inpaint hole covers the whole image");

    const int w = img.width(), h = img.height();
    detail::FmmState s;
    s.w = w;
    s.h = h;
    s.flag.assign(img.size(), detail::FmmFlag::Known);
    s.t.assign(img.size(), 0.0);

    FloatImage out = img;
    using Entry = std::pair<double, std::size_t>;  // (T, index); index breaks ties
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!hole.test(x, y)) continue;
            s.flag[s.idx(x, y)] = detail::FmmFlag::Inside;
            s.t[s.idx(x, y)] = detail::kFmmInf;
        }
    }
    // Initial band: known pixels 4-adjacent to the hole, T = 0.
    constexpr std::array<std::array<int, 2>, 4> nb{{{0, -1}, {-1, 0}, {1, 0}, {0, 1}}};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (hole.test(x, y)) continue;
            for (const auto& d : nb) {
                const int xx = x + d[0], yy = y + d[1];
                if (s.in(xx, yy) && hole.test(xx, yy)) {
                    s.flag[s.idx(x, y)] = detail::FmmFlag::Band;
                    heap.emplace(0.0, s.idx(x, y));
                    break;
                }
            }
        }
    }

    while (!heap.empty()) {
        const auto [tv, i] = heap.top();
        heap.pop();
        if (s.flag[i] == detail::FmmFlag::Known || tv > s.t[i]) continue;
        s.flag[i] = detail::FmmFlag::Known;
        const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
        for (const auto& d : nb) {
            const int xx = x + d[0], yy = y + d[1];
            if (!s.in(xx, yy)) continue;
            const auto j = s.idx(xx, yy);
            if (s.flag[j] == detail::FmmFlag::Known) continue;
            const double tn = detail::eikonal(s, xx, yy);
            if (s.flag[j] == detail::FmmFlag::Inside) {
                s.t[j] = tn;
                out.at(xx, yy) = detail::fill_pixel(out, s, xx, yy, radius);
                s.flag[j] = detail::FmmFlag::Band;
                heap.emplace(tn, j);
            } else if (tn < s.t[j]) {
                s.t[j] = tn;
                heap.emplace(tn, j);
            }
        }
    }
    return out;
}

}  // namespace mammo
