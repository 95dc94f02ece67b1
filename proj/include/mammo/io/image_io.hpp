#pragma once

// Grayscale / RGB raster persistence: binary PGM (P5) and PNG via libpng.
// 16-bit samples are big-endian in both formats.

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "mammo/core/raster.hpp"
#include "mammo/error.hpp"

namespace mammo::io {

/// Three 8-bit planes written as interleaved RGB.
struct Rgb8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> interleaved;  // r, g, b per pixel, row-major
};

namespace detail {

inline std::string lower_ext(const std::filesystem::path& p) {
    auto e = p.extension().string();
    for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e;
}

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

// PGM header token reader that skips whitespace and '#' comments.
inline std::string pgm_token(std::istream& in) {
    std::string tok;
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            if (!tok.empty()) break;
        } else {
            tok.push_back(static_cast<char>(c));
        }
        c = in.get();
    }
    return tok;
}

struct PngRead {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngRead() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWrite {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWrite() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

inline void png_warning_fn(png_structp, png_const_charp) {}

struct DecodedPng {
    int width = 0, height = 0, bit_depth = 8, channels = 1;
    std::vector<std::uint16_t> samples;  // interleaved
};

inline DecodedPng decode_png(const std::filesystem::path& path) {
    auto file = open_file(path, "rb");
    PngRead r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_fn);
    if (!r.png) throw IoError("png: cannot allocate reader");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw IoError("png: cannot allocate info");
    DecodedPng out;
    std::vector<std::uint8_t> raw;
    std::vector<png_bytep> rows;
    // libpng reports errors by longjmp; everything it may skip is declared above.
    if (setjmp(png_jmpbuf(r.png))) throw IoError("png: corrupt or unreadable " + path.string());
    png_init_io(r.png, file.get());
    png_read_info(r.png, r.info);

    const auto color = png_get_color_type(r.png, r.info);
    int depth = png_get_bit_depth(r.png, r.info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(r.png);
    png_read_update_info(r.png, r.info);

    out.width = static_cast<int>(png_get_image_width(r.png, r.info));
    out.height = static_cast<int>(png_get_image_height(r.png, r.info));
    out.bit_depth = png_get_bit_depth(r.png, r.info);
    out.channels = png_get_channels(r.png, r.info);
    if (out.bit_depth != 8 && out.bit_depth != 16) throw IoError("png: unsupported bit depth");
    const std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
    raw.resize(rowbytes * out.height);
    rows.resize(out.height);
    for (int y = 0; y < out.height; ++y) rows[y] = raw.data() + rowbytes * y;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);

    const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
    out.samples.resize(n);
    for (int y = 0; y < out.height; ++y) {
        const std::uint8_t* row = rows[y];
        const std::size_t per_row = static_cast<std::size_t>(out.width) * out.channels;
        for (std::size_t i = 0; i < per_row; ++i) {
            out.samples[y * per_row + i] =
                out.bit_depth == 16 ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1])
                                    : row[i];
        }
    }
    return out;
}

inline void encode_png(const std::filesystem::path& path, int width, int height, int bit_depth,
                       int channels, const std::vector<std::uint16_t>& samples) {
    auto file = open_file(path, "wb");
    PngWrite w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warning_fn);
    if (!w.png) throw IoError("png: cannot allocate writer");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw IoError("png: cannot allocate info");
    const std::size_t per_row = static_cast<std::size_t>(width) * channels;
    const std::size_t rowbytes = per_row * (bit_depth == 16 ? 2 : 1);
    std::vector<std::uint8_t> raw(rowbytes * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) {
        std::uint8_t* row = raw.data() + rowbytes * y;
        rows[y] = row;
        for (std::size_t i = 0; i < per_row; ++i) {
            const auto v = samples[y * per_row + i];
            if (bit_depth == 16) {
                row[2 * i] = static_cast<std::uint8_t>(v >> 8);
                row[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
            } else {
                row[i] = static_cast<std::uint8_t>(v);
            }
        }
    }
    if (setjmp(png_jmpbuf(w.png))) throw IoError("png: write failed for " + path.string());
    png_init_io(w.png, file.get());
    png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 bit_depth, channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_rows(w.png, w.info, rows.data());
    png_write_png(w.png, w.info, PNG_TRANSFORM_IDENTITY, nullptr);
}

}  // namespace detail

inline GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    if (detail::pgm_token(in) != "P5") throw IoError(path.string() + ": not a binary PGM (P5)");
    const int w = std::stoi(detail::pgm_token(in));
    const int h = std::stoi(detail::pgm_token(in));
    const int maxval = std::stoi(detail::pgm_token(in));
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
        throw IoError(path.string() + ": bad PGM header");
    }
    const int depth = maxval > 255 ? 16 : 8;
    std::vector<std::uint16_t> px(static_cast<std::size_t>(w) * h);
    if (depth == 8) {
        std::vector<unsigned char> raw(px.size());
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!in) throw IoError(path.string() + ": truncated PGM data");
        for (std::size_t i = 0; i < px.size(); ++i) px[i] = raw[i];
    } else {
        std::vector<unsigned char> raw(px.size() * 2);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!in) throw IoError(path.string() + ": truncated PGM data");
        for (std::size_t i = 0; i < px.size(); ++i) {
            px[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
        }
    }
    return GrayImage(w, h, depth, std::move(px));
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << img.width() << " " << img.height() << "\n" << img.max_value() << "\n";
    if (img.bit_depth() == 8) {
        for (auto v : img.pixels()) out.put(static_cast<char>(v));
    } else {
        for (auto v : img.pixels()) {
            out.put(static_cast<char>(v >> 8));
            out.put(static_cast<char>(v & 0xff));
        }
    }
    if (!out) throw IoError("write failed: " + path.string());
}

/// Reads a grayscale PNG. Color PNGs are rejected; use read_rgb_png.
inline GrayImage read_png(const std::filesystem::path& path) {
    auto d = detail::decode_png(path);
    if (d.channels != 1) throw IoError(path.string() + ": expected a grayscale PNG");
    return GrayImage(d.width, d.height, d.bit_depth, std::move(d.samples));
}

inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
    std::vector<std::uint16_t> samples(img.pixels().begin(), img.pixels().end());
    detail::encode_png(path, img.width(), img.height(), img.bit_depth(), 1, samples);
}

inline Rgb8Image read_rgb_png(const std::filesystem::path& path) {
    auto d = detail::decode_png(path);
    if (d.channels != 3 || d.bit_depth != 8) throw IoError(path.string() + ": expected 8-bit RGB PNG");
    Rgb8Image out{d.width, d.height, {}};
    out.interleaved.assign(d.samples.begin(), d.samples.end());
    return out;
}

inline void write_rgb_png(const std::filesystem::path& path, const Rgb8Image& img) {
    std::vector<std::uint16_t> samples(img.interleaved.begin(), img.interleaved.end());
    detail::encode_png(path, img.width, img.height, 8, 3, samples);
}

/// Dispatches on extension: .pgm / .png.
inline GrayImage read_gray(const std::filesystem::path& path) {
    const auto ext = detail::lower_ext(path);
    if (ext == ".pgm") return read_pgm(path);
    if (ext == ".png") return read_png(path);
    throw IoError("unsupported image extension: " + path.string());
}

inline void write_gray(const std::filesystem::path& path, const GrayImage& img) {
    const auto ext = detail::lower_ext(path);
    if (ext == ".pgm") return write_pgm(path, img);
    if (ext == ".png") return write_png(path, img);
    throw IoError("unsupported image extension: " + path.string());
}

/// Masks on disk: 8-bit, 0 = background, anything else = foreground.
inline BinaryMask read_mask(const std::filesystem::path& path) {
    const auto img = read_gray(path);
    BinaryMask m(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) m[i] = img[i] != 0;
    return m;
}

inline void write_mask(const std::filesystem::path& path, const BinaryMask& mask) {
    GrayImage img(mask.width(), mask.height(), 8);
    for (std::size_t i = 0; i < mask.size(); ++i) img[i] = mask[i] ? 255 : 0;
    write_gray(path, img);
}

/// Single-channel float image in [0, 1] stored as 16-bit, v -> round(v * 65535).
inline void write_float_png16(const std::filesystem::path& path, const FloatImage& img) {
    write_png(path, to_gray(img, 16));
}

/// One or three float planes in [0, 1] with the bit depth they came from.
struct PlaneImage {
    std::vector<FloatImage> planes;
    int bit_depth = 8;
};

/// Reads gray (PGM / PNG) or RGB PNG into planes scaled by the depth's max value.
inline PlaneImage read_planes(const std::filesystem::path& path) {
    if (detail::lower_ext(path) == ".pgm") {
        const auto g = read_pgm(path);
        return {{to_float(g)}, g.bit_depth()};
    }
    if (detail::lower_ext(path) != ".png") throw IoError("unsupported image extension: " + path.string());
    const auto d = detail::decode_png(path);
    if (d.channels != 1 && d.channels != 3) throw IoError(path.string() + ": expected 1 or 3 channels");
    const float scale = d.bit_depth == 16 ? 65535.0f : 255.0f;
    PlaneImage out{std::vector<FloatImage>(d.channels, FloatImage(d.width, d.height)), d.bit_depth};
    const std::size_t n = static_cast<std::size_t>(d.width) * d.height;
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < d.channels; ++c) out.planes[c][i] = d.samples[i * d.channels + c] / scale;
    }
    return out;
}

/// PNG with 1 or 3 channels, v -> round(clamp(v, 0, 1) * max).
inline void write_planes(const std::filesystem::path& path, const PlaneImage& img) {
    const auto c = static_cast<int>(img.planes.size());
    if (c != 1 && c != 3) throw ParameterError("write_planes: expected 1 or 3 planes");
    if (img.bit_depth != 8 && img.bit_depth != 16) throw ParameterError("write_planes: bit depth must be 8 or 16");
    const int w = img.planes[0].width(), h = img.planes[0].height();
    for (const auto& p : img.planes) require_same_shape(img.planes[0], p, "write_planes");
    const double maxv = img.bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<std::uint16_t> samples(static_cast<std::size_t>(w) * h * c);
    for (std::size_t i = 0; i < img.planes[0].size(); ++i) {
        for (int k = 0; k < c; ++k) {
            const double v = std::clamp(static_cast<double>(img.planes[k][i]), 0.0, 1.0);
            samples[i * c + k] = static_cast<std::uint16_t>(v * maxv + 0.5);
        }
    }
    detail::encode_png(path, w, h, img.bit_depth, c, samples);
}

}  // namespace mammo::io
