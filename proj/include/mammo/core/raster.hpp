#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mammo/error.hpp"

namespace mammo {

/// Row-major 2-D raster. Pixel (x, y) lives at index y * width + x.
template <class T>
class Raster {
public:
    using value_type = T;

    Raster() = default;

    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height) {
        if (width < 0 || height < 0) {
            throw ParameterError("raster dimensions must be non-negative");
        }
        pixels_.assign(static_cast<std::size_t>(width) * height, fill);
    }

    Raster(int width, int height, std::vector<T> pixels)
        : width_(width), height_(height), pixels_(std::move(pixels)) {
        if (width < 0 || height < 0 ||
            pixels_.size() != static_cast<std::size_t>(width) * height) {
            throw ParameterError("pixel buffer does not match " + std::to_string(width) + "x" +
                                 std::to_string(height));
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }

    T& at(int x, int y) { return pixels_[index(x, y)]; }
    const T& at(int x, int y) const { return pixels_[index(x, y)]; }

    /// Border-replicating read.
    const T& clamped(int x, int y) const {
        return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
    }

    T& operator[](std::size_t i) { return pixels_[i]; }
    const T& operator[](std::size_t i) const { return pixels_[i]; }

    std::span<T> pixels() noexcept { return pixels_; }
    std::span<const T> pixels() const noexcept { return pixels_; }
    std::span<const T> row(int y) const {
        return std::span<const T>(pixels_).subspan(static_cast<std::size_t>(y) * width_, width_);
    }

    template <class U>
    bool same_shape(const Raster<U>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> pixels_;
};

/// Real-valued plane: normalized intensities, CLAHE output, displacements.
using FloatImage = Raster<float>;

/// Integer intensities with an explicit bit depth (8 or 16).
class GrayImage : public Raster<std::uint16_t> {
public:
    GrayImage() = default;

    GrayImage(int width, int height, int bit_depth, std::uint16_t fill = 0)
        : Raster(width, height, fill), bit_depth_(checked_depth(bit_depth)) {
        check_range();
    }

    GrayImage(int width, int height, int bit_depth, std::vector<std::uint16_t> pixels)
        : Raster(width, height, std::move(pixels)), bit_depth_(checked_depth(bit_depth)) {
        check_range();
    }

    int bit_depth() const noexcept { return bit_depth_; }
    std::uint16_t max_value() const noexcept {
        return static_cast<std::uint16_t>((1u << bit_depth_) - 1u);
    }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    static int checked_depth(int depth) {
        if (depth != 8 && depth != 16) {
            throw ParameterError("bit depth must be 8 or 16, got " + std::to_string(depth));
        }
        return depth;
    }

    void check_range() const {
        const auto limit = max_value();
        for (auto v : pixels()) {
            if (v > limit) {
                throw ParameterError("intensity " + std::to_string(v) + " exceeds " +
                                     std::to_string(bit_depth_) + "-bit range");
            }
        }
    }

    int bit_depth_ = 8;
};

/// Boolean raster stored one byte per pixel (0 or 1).
class BinaryMask : public Raster<std::uint8_t> {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false)
        : Raster(width, height, static_cast<std::uint8_t>(fill)) {}

    bool test(int x, int y) const { return at(x, y) != 0; }
    void set(int x, int y, bool v = true) { at(x, y) = static_cast<std::uint8_t>(v); }

    std::size_t count() const {
        return static_cast<std::size_t>(std::count_if(pixels().begin(), pixels().end(),
                                                      [](std::uint8_t v) { return v != 0; }));
    }
    bool any() const {
        return std::any_of(pixels().begin(), pixels().end(), [](std::uint8_t v) { return v != 0; });
    }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

template <class T, class U>
void require_same_shape(const Raster<T>& a, const Raster<U>& b, const std::string& what) {
    if (!a.same_shape(b)) {
        throw ParameterError(what + ": shape mismatch (" + std::to_string(a.width()) +
                             "x" + std::to_string(a.height()) + " vs " +
                             std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
    }
}

inline FloatImage to_float(const GrayImage& img) {
    FloatImage out(img.width(), img.height());
    const float scale = 1.0f / static_cast<float>(img.max_value());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = static_cast<float>(img[i]) * scale;
    return out;
}

/// Quantizes values in [0, 1] to the given bit depth (round to nearest).
inline GrayImage to_gray(const FloatImage& img, int bit_depth) {
    GrayImage out(img.width(), img.height(), bit_depth);
    const double top = out.max_value();
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double v = std::clamp(static_cast<double>(img[i]), 0.0, 1.0);
        out[i] = static_cast<std::uint16_t>(v * top + 0.5);
    }
    return out;
}

inline BinaryMask operator|(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b, "mask union");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] | b[i];
    return out;
}

inline BinaryMask operator&(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b, "mask intersection");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] & b[i];
    return out;
}

/// a \ b
inline BinaryMask subtract(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b, "mask difference");
    BinaryMask out(a.width(), a.height());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && !b[i]) ? 1 : 0;
    return out;
}

inline bool is_subset(const BinaryMask& inner, const BinaryMask& outer) {
    require_same_shape(inner, outer, "mask subset");
    for (std::size_t i = 0; i < inner.size(); ++i) {
        if (inner[i] && !outer[i]) return false;
    }
    return true;
}

}  // namespace mammo
