#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <cstdint>

#include "mammo/core/filters.hpp"
#include "mammo/core/raster.hpp"
#include "mammo/error.hpp"
#include "mammo/random.hpp"

namespace mammo {

/// Elastic deformation settings (random-field model of Simard et al.).
struct ElasticParams {
    double alpha = 34.0;  // displacement scale, pixels
    double sigma = 8.0;   // smoothing of the random field, pixels
    std::uint64_t seed = 0;

    void validate() const {
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ParameterError("elastic alpha must be >= 0");
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("elastic sigma must be > 0");
    }
};

/// Per-pixel backward displacements: output pixel (x, y) reads the source
/// at (x + dx, y + dy).
struct DisplacementField {
    FloatImage dx;
    FloatImage dy;

    int width() const noexcept { return dx.width(); }
    int height() const noexcept { return dx.height(); }

    static DisplacementField zero(int width, int height) {
        return {FloatImage(width, height), FloatImage(width, height)};
    }
};

/// dx then dy are filled (raster order) with uniform draws in [-1, 1),
/// each plane is Gaussian-smoothed with `sigma`, then scaled by `alpha`.
inline DisplacementField make_displacement_field(int width, int height, const ElasticParams& params) {
    params.validate();
    if (width <= 0 || height <= 0) throw ParameterError("displacement field needs a positive shape");
    Rng rng(params.seed);
    DisplacementField f = DisplacementField::zero(width, height);
    for (auto& v : f.dx.pixels()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& v : f.dy.pixels()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    if (params.alpha == 0.0) return DisplacementField::zero(width, height);
    f.dx = gaussian_filter(f.dx, params.sigma);
    f.dy = gaussian_filter(f.dy, params.sigma);
    const auto a = static_cast<float>(params.alpha);
    for (auto& v : f.dx.pixels()) v *= a;
    for (auto& v : f.dy.pixels()) v *= a;
    return f;
}

/// Backward warp with bilinear sampling; samples outside the frame clamp to
/// the border.
inline FloatImage warp(const FloatImage& img, const DisplacementField& field) {
    require_same_shape(img, field.dx, "warp");
    require_same_shape(img, field.dy, "warp");
    FloatImage out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            out.at(x, y) = static_cast<float>(
                bilinear_sample(img, x + static_cast<double>(field.dx.at(x, y)),
                                y + static_cast<double>(field.dy.at(x, y))));
        }
    }
    return out;
}

/// Source pixel nearest to (x + dx, y + dy), clamped into the frame. Rounding
/// half up is the 0.5 threshold on the interpolation weight.
inline std::pair<int, int> nearest_source(const DisplacementField& field, int x, int y) {
    const double sx = x + static_cast<double>(field.dx.at(x, y));
    const double sy = y + static_cast<double>(field.dy.at(x, y));
    const int nx = static_cast<int>(std::floor(sx + 0.5));
    const int ny = static_cast<int>(std::floor(sy + 0.5));
    return {std::clamp(nx, 0, field.width() - 1), std::clamp(ny, 0, field.height() - 1)};
}

/// Mask warp with nearest-neighbour sampling; the result stays binary.
inline BinaryMask warp(const BinaryMask& mask, const DisplacementField& field) {
    require_same_shape(mask, field.dx, "warp");
    require_same_shape(mask, field.dy, "warp");
    BinaryMask out(mask.width(), mask.height());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            const auto [sx, sy] = nearest_source(field, x, y);
            out.set(x, y, mask.test(sx, sy));
        }
    }
    return out;
}

}  // namespace mammo
