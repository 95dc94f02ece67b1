#pragma once

// Natural deformation: elastically deform one region of an image (a lesion
// or an arbitrary patch of breast) and composite it back so the surrounding
// tissue stays untouched.
//
//   1. split the image into the region (inside target_mask) and background;
//   2. warp both with one shared displacement field;
//   3. paste the warped region onto the original background; the residual
//      mask is target_mask minus the warped target mask;
//   4. residual pixels take their value from the warped background;
//   5. the seam band (warped-mask boundary dilated by the inpaint radius,
//      restricted to the residual) is refilled by fast-marching inpainting.
//
// The field is generated only on the target's bounding window padded by
// ceil(alpha) + 1 + radius, which contains every pixel the composite can touch.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "mammo/augmentation/elastic.hpp"
#include "mammo/augmentation/inpaint.hpp"
#include "mammo/augmentation/sample.hpp"
#include "mammo/core/bbox.hpp"
#include "mammo/core/filters.hpp"
#include "mammo/error.hpp"
#include "mammo/random.hpp"

namespace mammo {

inline constexpr int kDefaultInpaintRadius = 3;

struct NaturalDeformOutcome {
    AugmentSample sample;
    BinaryMask warped_target;  // full-frame
    BinaryMask residual;       // target \ warped_target
    BinaryMask seam;           // pixels refilled by inpainting
    BBox window;               // region where the displacement field lives
};

namespace detail {

// Bilinear read that only trusts corners whose mask bit equals `want`,
// renormalizing the surviving weights. nullopt when no corner qualifies.
inline std::optional<double> masked_bilinear(const FloatImage& img, const BinaryMask& mask, bool want,
                                             double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
    const int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = x - x0, fy = y - y0;
    const int xs[4] = {x0, x1, x0, x1};
    const int ys[4] = {y0, y0, y1, y1};
    const double ws[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    double num = 0.0, den = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (ws[k] == 0.0 || mask.test(xs[k], ys[k]) != want) continue;
        num += ws[k] * img.at(xs[k], ys[k]);
        den += ws[k];
    }
    if (den == 0.0) return std::nullopt;
    return num / den;
}

template <class R>
void paste(R& dst, const R& src, int ox, int oy) {
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) dst.at(ox + x, oy + y) = src.at(x, y);
    }
}

}  // namespace detail

inline NaturalDeformOutcome natural_deform_detailed(const AugmentSample& sample,
                                                    const BinaryMask& target_mask,
                                                    const ElasticParams& params,
                                                    int inpaint_radius = kDefaultInpaintRadius) {
    params.validate();
    sample.validate_shapes();
    require_same_shape(sample.channels.front(), target_mask, "natural_deform");
    if (inpaint_radius < 1) throw ParameterError("inpaint radius must be >= 1");
    const auto target_box = tight_bbox(target_mask);
    if (!target_box) throw ParameterError("natural_deform: target mask is empty");

    const int w = sample.width(), h = sample.height();
    const int pad = static_cast<int>(std::ceil(params.alpha)) + 1 + inpaint_radius;
    const BBox window = *clip_bbox(
        {target_box->x_min - pad, target_box->y_min - pad, target_box->x_max + pad, target_box->y_max + pad},
        w, h);

    const auto field = make_displacement_field(static_cast<int>(window.width()),
                                               static_cast<int>(window.height()), params);
    const auto target = crop(target_mask, window);
    const auto warped = warp(target, field);
    if (!warped.any()) {
        throw DeformationOutOfBoundsError("natural_deform: warp moved the region out of frame");
    }
    const auto residual = subtract(target, warped);
    const auto band = dilate(inner_boundary(warped), inpaint_radius) & residual;

    NaturalDeformOutcome result;
    result.window = window;
    result.sample = sample;

    BinaryMask hole = band;
    std::vector<FloatImage> composed;
    for (const auto& full : sample.channels) {
        const auto src = crop(full, window);
        FloatImage out = src;
        for (int y = 0; y < out.height(); ++y) {
            for (int x = 0; x < out.width(); ++x) {
                const bool in_warped = warped.test(x, y);
                const bool in_residual = residual.test(x, y);
                if (!in_warped && !in_residual) continue;
                const double sx = x + static_cast<double>(field.dx.at(x, y));
                const double sy = y + static_cast<double>(field.dy.at(x, y));
                // Warped pixels read the region; residual pixels read the background.
                const auto v = detail::masked_bilinear(src, target, in_warped, sx, sy);
                if (v) {
                    out.at(x, y) = static_cast<float>(*v);
                } else {
                    hole.set(x, y);
                }
            }
        }
        composed.push_back(std::move(out));
    }
    for (std::size_t c = 0; c < composed.size(); ++c) {
        const auto filled = inpaint_fmm(composed[c], hole, inpaint_radius);
        detail::paste(result.sample.channels[c], filled, window.x_min, window.y_min);
    }

    BinaryMask warped_full(w, h), residual_full(w, h), seam_full(w, h);
    detail::paste(warped_full, warped, window.x_min, window.y_min);
    detail::paste(residual_full, residual, window.x_min, window.y_min);
    detail::paste(seam_full, hole, window.x_min, window.y_min);

    for (auto& lesion : result.sample.lesion_masks) {
        if (lesion == target_mask) lesion = warped_full;
    }
    result.sample.refresh_boxes();
    result.warped_target = std::move(warped_full);
    result.residual = std::move(residual_full);
    result.seam = std::move(seam_full);
    return result;
}

/// Deforms the region under `target_mask`. When the target is one of the
/// sample's lesion masks, that mask and its box follow the warp.
inline AugmentSample natural_deform(const AugmentSample& sample, const BinaryMask& target_mask,
                                    const ElasticParams& params,
                                    int inpaint_radius = kDefaultInpaintRadius) {
    return natural_deform_detailed(sample, target_mask, params, inpaint_radius).sample;
}

/// Random disc placed on breast tissue, away from every lesion.
struct DiscRegion {
    int cx = 0;
    int cy = 0;
    int radius = 0;
};

struct NonMassRegionConfig {
    int count = 2;
    int min_radius = 16;
    int max_radius = 64;
    int max_attempts = 200;  // per region
};

inline BinaryMask disc_mask(int width, int height, const DiscRegion& d) {
    BinaryMask m(width, height);
    const auto r2 = static_cast<std::int64_t>(d.radius) * d.radius;
    for (int y = std::max(0, d.cy - d.radius); y <= std::min(height - 1, d.cy + d.radius); ++y) {
        for (int x = std::max(0, d.cx - d.radius); x <= std::min(width - 1, d.cx + d.radius); ++x) {
            const std::int64_t dx = x - d.cx, dy = y - d.cy;
            if (dx * dx + dy * dy <= r2) m.set(x, y);
        }
    }
    return m;
}

/// Draws up to cfg.count discs centred on breast pixels with radius uniform in
/// [min_radius, max_radius]; a candidate touching any lesion is redrawn.
/// Fewer discs come back when the attempts run out.
inline std::vector<DiscRegion> sample_non_mass_regions(const BinaryMask& breast,
                                                       const std::vector<BinaryMask>& lesions,
                                                       const NonMassRegionConfig& cfg, Rng& rng) {
    if (cfg.min_radius < 1 || cfg.max_radius < cfg.min_radius) {
        throw ParameterError("non-mass region radius range is invalid");
    }
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < breast.size(); ++i) {
        if (breast[i]) candidates.push_back(i);
    }
    std::vector<DiscRegion> out;
    if (candidates.empty()) return out;
    BinaryMask lesion_union(breast.width(), breast.height());
    for (const auto& l : lesions) lesion_union = lesion_union | l;

    for (int k = 0; k < cfg.count; ++k) {
        for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
            const auto pick = candidates[rng.below(candidates.size())];
            DiscRegion d{static_cast<int>(pick % breast.width()), static_cast<int>(pick / breast.width()),
                         static_cast<int>(rng.between(cfg.min_radius, cfg.max_radius))};
            bool clash = false;
            const auto r2 = static_cast<std::int64_t>(d.radius) * d.radius;
            for (int y = std::max(0, d.cy - d.radius); y <= std::min(breast.height() - 1, d.cy + d.radius) && !clash; ++y) {
                for (int x = std::max(0, d.cx - d.radius); x <= std::min(breast.width() - 1, d.cx + d.radius); ++x) {
                    const std::int64_t dx = x - d.cx, dy = y - d.cy;
                    if (dx * dx + dy * dy <= r2 && lesion_union.test(x, y)) {
                        clash = true;
                        break;
                    }
                }
            }
            if (!clash) {
                out.push_back(d);
                break;
            }
        }
    }
    return out;
}

}  // namespace mammo
