#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "mammo/core/bbox.hpp"
#include "mammo/core/filters.hpp"
#include "mammo/core/otsu.hpp"
#include "mammo/core/raster.hpp"
#include "mammo/error.hpp"

namespace mammo {

inline constexpr double kDefaultSegmentationSigma = 2.0;

/// Fractions of the sorted breast intensities cut off at each end.
struct TruncationParams {
    double low_fraction = 0.05;
    double high_fraction = 0.01;

    void validate() const {
        if (!(low_fraction >= 0.0 && low_fraction < 1.0) ||
            !(high_fraction >= 0.0 && high_fraction < 1.0) ||
            !(low_fraction + high_fraction < 1.0)) {
            throw ParameterError("truncation fractions must lie in [0,1) with low + high < 1");
        }
    }
};

/// The breast's bounding rectangle cut out of the source image.
struct BreastRoi {
    GrayImage image;
    BinaryMask mask;  // breast pixels inside the crop
    int origin_x = 0;
    int origin_y = 0;

    /// Maps a box from source-image coordinates into crop coordinates.
    BBox to_crop(const BBox& b) const { return b.translated(-origin_x, -origin_y); }
};

/// Breast mask over the full image: blur, Otsu, keep the largest 8-connected
/// foreground region (drops nameplates and labels).
inline BinaryMask breast_mask(const GrayImage& img, double sigma = kDefaultSegmentationSigma) {
    const auto blurred = gaussian_filter(img, sigma);
    std::uint16_t t = 0;
    try {
        t = otsu_threshold(blurred);
    } catch (const DegenerateInputError& e) {
        throw SegmentationError(std::string("breast segmentation: ") + e.what());
    }
    const auto fg = binarize_above(blurred, t);
    if (!fg.any()) throw SegmentationError("breast segmentation: empty foreground");
    return largest_connected_component(fg);
}

inline BreastRoi segment_breast(const GrayImage& img, double sigma = kDefaultSegmentationSigma) {
    const auto mask = breast_mask(img, sigma);
    const auto box = *tight_bbox(mask);
    return BreastRoi{crop(img, box), crop(mask, box), box.x_min, box.y_min};
}

struct PercentileRange {
    std::uint16_t p_min = 0;
    std::uint16_t p_max = 0;
};

/// Nearest-rank truncation points over breast pixels only. With the n
/// intensities sorted ascending, P_min sits at index floor(low * n) and
/// P_max at index n - 1 - floor(high * n), i.e. that many values are cut
/// from each end.
inline PercentileRange truncation_percentiles(const BreastRoi& roi, const TruncationParams& params) {
    params.validate();
    require_same_shape(roi.image, roi.mask, "truncation_percentiles");
    std::vector<std::uint16_t> values;
    values.reserve(roi.mask.count());
    for (std::size_t i = 0; i < roi.mask.size(); ++i) {
        if (roi.mask[i]) values.push_back(roi.image[i]);
    }
    if (values.empty()) throw DegenerateInputError("breast mask is empty");
    const auto n = values.size();
    // The epsilon keeps products like 0.29 * 100 = 28.999... on the intended rank.
    const auto cut = [n](double f) {
        return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9));
    };
    const std::size_t cut_lo = cut(params.low_fraction);
    const std::size_t cut_hi = cut(params.high_fraction);
    const std::size_t lo = std::min(cut_lo, n - 1);
    const std::size_t hi = cut_hi >= n ? 0 : n - 1 - cut_hi;

    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const auto p_min = values[lo];
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(hi), values.end());
    const auto p_max = values[hi];
    if (p_min >= p_max) {
        throw DegenerateInputError("degenerate breast intensity range: P_min=" + std::to_string(p_min) +
                                   " P_max=" + std::to_string(p_max));
    }
    return {p_min, p_max};
}

/// Clamp to [P_min, P_max], then map linearly onto [0, 1].
inline float truncate_normalize_value(std::uint16_t v, PercentileRange r) {
    const double c = std::clamp<double>(v, r.p_min, r.p_max);
    return static_cast<float>((c - r.p_min) / (static_cast<double>(r.p_max) - r.p_min));
}

/// Every crop pixel (breast and residual background) goes through the same
/// clamp-and-rescale.
inline FloatImage truncate_normalize(const BreastRoi& roi, const TruncationParams& params) {
    const auto range = truncation_percentiles(roi, params);
    FloatImage out(roi.image.width(), roi.image.height());
    for (std::size_t i = 0; i < roi.image.size(); ++i) {
        out[i] = truncate_normalize_value(roi.image[i], range);
    }
    return out;
}

}  // namespace mammo
