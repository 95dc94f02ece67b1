#pragma once

#include <array>
#include <cmath>
#include <numbers>

#include "mammo/augmentation/sample.hpp"
#include "mammo/core/filters.hpp"
#include "mammo/core/raster.hpp"
#include "mammo/random.hpp"

namespace mammo {

/// One concrete affine + flip augmentation. Angles in degrees, translation
/// as a signed fraction of width / height.
struct ClassicAugmentConfig {
    double rotation_deg = 0.0;
    double translate_x = 0.0;
    double translate_y = 0.0;
    double shear_deg = 0.0;
    double scale = 1.0;
    bool hflip = false;
    bool vflip = false;

    bool is_identity() const {
        return rotation_deg == 0.0 && translate_x == 0.0 && translate_y == 0.0 && shear_deg == 0.0 &&
               scale == 1.0 && !hflip && !vflip;
    }
};

/// Ranges the random draw respects.
struct ClassicAugmentRanges {
    double max_rotation_deg = 0.1;
    double max_translation = 0.1;  // magnitude, fraction of the image side
    double max_shear_deg = 0.1;
    double min_scale = 0.9;
    double max_scale = 1.1;
    double flip_probability = 0.5;
};

/// Rotation and shear uniform in [-max, max]; translation magnitude uniform
/// in [0, max] along a uniform random direction; scale uniform in
/// [min, max]; each flip an independent coin with `flip_probability`.
inline ClassicAugmentConfig draw_classic_config(const ClassicAugmentRanges& r, Rng& rng) {
    ClassicAugmentConfig c;
    c.rotation_deg = rng.uniform(-r.max_rotation_deg, r.max_rotation_deg);
    const double magnitude = rng.uniform(0.0, r.max_translation);
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    c.translate_x = magnitude * std::cos(heading);
    c.translate_y = magnitude * std::sin(heading);
    c.shear_deg = rng.uniform(-r.max_shear_deg, r.max_shear_deg);
    c.scale = rng.uniform(r.min_scale, r.max_scale);
    c.hflip = rng.uniform01() < r.flip_probability;
    c.vflip = rng.uniform01() < r.flip_probability;
    return c;
}

namespace detail {

// Forward map p' = C + t + M (p - C) with M = scale * shear * rotation * flip,
// all about the image centre C. Stores the inverse for backward sampling.
struct AffineInverse {
    double cx, cy, tx, ty;
    std::array<double, 4> inv;  // row-major 2x2

    std::array<double, 2> source(int x, int y) const {
        const double ux = x - cx - tx, uy = y - cy - ty;
        return {cx + inv[0] * ux + inv[1] * uy, cy + inv[2] * ux + inv[3] * uy};
    }
};

inline AffineInverse make_affine_inverse(const ClassicAugmentConfig& c, int w, int h) {
    constexpr double deg = std::numbers::pi / 180.0;
    const double ct = std::cos(c.rotation_deg * deg), st = std::sin(c.rotation_deg * deg);
    const double sh = std::tan(c.shear_deg * deg);
    const double fx = c.hflip ? -1.0 : 1.0, fy = c.vflip ? -1.0 : 1.0;
    // shear * rotation
    const double a = ct + sh * st, b = -st + sh * ct, d = st, e = ct;
    // * flip, * scale
    const double m00 = c.scale * a * fx, m01 = c.scale * b * fy;
    const double m10 = c.scale * d * fx, m11 = c.scale * e * fy;
    const double det = m00 * m11 - m01 * m10;
    return AffineInverse{(w - 1) / 2.0, (h - 1) / 2.0, c.translate_x * w, c.translate_y * h,
                         {m11 / det, -m01 / det, -m10 / det, m00 / det}};
}

}  // namespace detail

/// Applies the transform: planes bilinearly, masks nearest-neighbour;
/// samples falling outside the frame read 0. Boxes are recomputed from the
/// transformed masks (lesions pushed fully out of frame are dropped).
inline AugmentSample classic_augment(const AugmentSample& sample, const ClassicAugmentConfig& cfg) {
    sample.validate_shapes();
    if (!(cfg.scale > 0.0)) throw ParameterError("classic augmentation scale must be positive");
    if (cfg.is_identity()) return sample;
    const int w = sample.width(), h = sample.height();
    const auto tr = detail::make_affine_inverse(cfg, w, h);

    AugmentSample out;
    for (const auto& ch : sample.channels) {
        FloatImage dst(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const auto [sx, sy] = tr.source(x, y);
                if (sx < -0.5 || sy < -0.5 || sx > w - 0.5 || sy > h - 0.5) continue;
                dst.at(x, y) = static_cast<float>(bilinear_sample(ch, sx, sy));
            }
        }
        out.channels.push_back(std::move(dst));
    }
    for (const auto& m : sample.lesion_masks) {
        BinaryMask dst(w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const auto [sx, sy] = tr.source(x, y);
                const int nx = static_cast<int>(std::floor(sx + 0.5));
                const int ny = static_cast<int>(std::floor(sy + 0.5));
                if (m.contains(nx, ny)) dst.set(x, y, m.test(nx, ny));
            }
        }
        out.lesion_masks.push_back(std::move(dst));
    }
    out.refresh_boxes();
    return out;
}

}  // namespace mammo
