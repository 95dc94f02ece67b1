#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "mammo/core/bbox.hpp"
#include "mammo/core/filters.hpp"
#include "mammo/core/raster.hpp"
#include "mammo/evaluation/matching.hpp"
#include "mammo/io/image_io.hpp"
#include "mammo/pipeline/manifest.hpp"
#include "mammo/random.hpp"

namespace fixture {

namespace fs = std::filesystem;
using mammo::BBox;
using mammo::BinaryMask;
using mammo::FloatImage;
using mammo::GrayImage;

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        const auto base = fs::temp_directory_path();
        for (;;) {
            path_ = base / ("mammo_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
            if (fs::create_directories(path_)) break;
        }
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

inline BinaryMask ellipse_mask(int w, int h, double cx, double cy, double rx, double ry) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double u = (x - cx) / rx, v = (y - cy) / ry;
            if (u * u + v * v <= 1.0) m.set(x, y);
        }
    }
    return m;
}

/// Smooth random texture in [0, 1].
inline FloatImage texture(int w, int h, std::uint64_t seed, double sigma = 3.0) {
    mammo::Rng rng(seed);
    FloatImage f(w, h);
    for (auto& v : f.pixels()) v = static_cast<float>(rng.uniform01());
    f = mammo::gaussian_filter(f, sigma);
    const auto [mn, mx] = std::minmax_element(f.pixels().begin(), f.pixels().end());
    const float lo = *mn, span = std::max(*mx - *mn, 1e-6f);
    for (auto& v : f.pixels()) v = (v - lo) / span;
    return f;
}

struct Mammogram {
    GrayImage image;
    BinaryMask breast;
    BBox nameplate;
    std::vector<BBox> boxes;
    std::vector<BinaryMask> masks;
};

/// 16-bit synthetic mammogram: half-ellipse breast against the left edge,
/// textured tissue, `lesions` bright elliptical masses inside it, and a
/// bright rectangular label in the top-right corner.
inline Mammogram mammogram(int w, int h, std::uint64_t seed, int lesions = 1) {
    mammo::Rng rng(seed);
    Mammogram m{GrayImage(w, h, 16), BinaryMask(w, h), {}, {}, {}};
    const double rx = w * rng.uniform(0.55, 0.7), ry = h * rng.uniform(0.38, 0.45);
    const double cy = h * rng.uniform(0.48, 0.52);
    m.breast = ellipse_mask(w, h, 0.0, cy, rx, ry);
    const auto tex = texture(w, h, mammo::derive_seed(seed, 1));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double v;
            if (m.breast.test(x, y)) {
                v = 18000.0 + 22000.0 * tex.at(x, y);
            } else {
                v = 300.0 + 900.0 * rng.uniform01();
            }
            m.image.at(x, y) = static_cast<std::uint16_t>(v);
        }
    }
    const int pw = std::max(6, w / 10), ph = std::max(4, h / 16);
    m.nameplate = BBox{w - pw - 3, 3, w - 3, 3 + ph};
    for (int y = m.nameplate.y_min; y < m.nameplate.y_max; ++y) {
        for (int x = m.nameplate.x_min; x < m.nameplate.x_max; ++x) m.image.at(x, y) = 60000;
    }
    for (int k = 0; k < lesions; ++k) {
        // Lesions stacked vertically so they never overlap.
        const double lcx = rx * rng.uniform(0.3, 0.45);
        const double lcy = cy + (k - (lesions - 1) / 2.0) * ry * 0.6;
        const double lrx = std::min(w, h) * rng.uniform(0.05, 0.08);
        const double lry = lrx * rng.uniform(0.7, 1.0);
        auto mask = ellipse_mask(w, h, lcx, lcy, lrx, lry);
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (mask[i]) m.image[i] = static_cast<std::uint16_t>(std::min(65535.0, m.image[i] + 15000.0));
        }
        m.boxes.push_back(*mammo::tight_bbox(mask));
        m.masks.push_back(std::move(mask));
    }
    return m;
}

/// Image whose intensities are pairwise distinct: background values drawn
/// without replacement from [0, 16384), breast values from [30000, 65536).
inline GrayImage distinct_intensity_breast(int w, int h, std::uint64_t seed) {
    mammo::Rng rng(seed);
    const double cx = w * rng.uniform(0.0, 0.2), cy = h * rng.uniform(0.4, 0.6);
    const auto breast = ellipse_mask(w, h, cx, cy, w * rng.uniform(0.5, 0.75), h * rng.uniform(0.3, 0.45));
    std::vector<std::uint16_t> bg(16384), fg(65536 - 30000);
    std::iota(bg.begin(), bg.end(), std::uint16_t{0});
    std::iota(fg.begin(), fg.end(), std::uint16_t{30000});
    rng.shuffle(std::span<std::uint16_t>(bg));
    rng.shuffle(std::span<std::uint16_t>(fg));
    GrayImage img(w, h, 16);
    std::size_t nb = 0, nf = 0;
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = breast[i] ? fg.at(nf++) : bg.at(nb++);
    return img;
}

/// Detection scenario with TPR 0.930 and FPPI 53/107 at conf_th 0.2:
/// 100 GT boxes over 107 images, 93 found by a high-confidence box at
/// IOU >= 0.5, 53 high-confidence boxes that hit nothing, and low-confidence
/// boxes (some on the remaining GTs) that fall under the threshold.
struct DetectionSet {
    std::vector<mammo::eval::Prediction> preds;
    std::vector<mammo::eval::GroundTruth> gts;
    std::int64_t n_images = 0;
};

inline DetectionSet tpr_fppi_fixture() {
    DetectionSet d;
    d.n_images = 107;
    const auto id = [](int i) { return "img" + std::to_string(1000 + i); };
    // Images 0..79: 80 images carry the 100 GTs (20 of them carry two).
    int gt_index = 0;
    for (int i = 0; i < 80; ++i) {
        const int count = i < 20 ? 2 : 1;
        for (int k = 0; k < count; ++k) {
            const BBox g{100 + 300 * k, 120, 180 + 300 * k, 210};
            d.gts.push_back({id(i), g});
            if (gt_index < 93) {
                d.preds.push_back({id(i), BBox{g.x_min + 5, g.y_min + 4, g.x_max + 5, g.y_max + 2}, 0.9 - 0.001 * gt_index});
            } else {
                d.preds.push_back({id(i), BBox{g.x_min + 2, g.y_min, g.x_max, g.y_max}, 0.1});
            }
            ++gt_index;
        }
    }
    // 53 false alarms: 30 on lesion images away from the GTs, 23 on normal images 80..106.
    for (int k = 0; k < 53; ++k) {
        const int img = k < 30 ? 40 + k : 80 + (k - 30);
        d.preds.push_back({id(img), BBox{700, 600, 760, 680}, 0.5 + 0.005 * k});
    }
    // Sub-threshold clutter.
    for (int k = 0; k < 15; ++k) d.preds.push_back({id(90 + k % 17), BBox{20, 20, 60, 50}, 0.05});
    return d;
}

/// Random per-image scenario for the matching properties. GTs on one image
/// are separated by at least one empty pixel column or row; predictions are
/// jittered copies of GTs (some duplicated) and free boxes. At most
/// `max_boxes` predictions and GTs per image.
inline DetectionSet random_detection_set(std::uint64_t seed, int images = 6, int max_boxes = 6) {
    mammo::Rng rng(seed);
    DetectionSet d;
    d.n_images = images + static_cast<int>(rng.between(0, 3));
    for (int i = 0; i < images; ++i) {
        const std::string id = "im" + std::to_string(i);
        const int n_gt = static_cast<int>(rng.between(0, max_boxes));
        std::vector<BBox> gts;
        // GTs live in disjoint grid cells of 50 px with sizes up to 44 px.
        std::vector<int> cells(16);
        std::iota(cells.begin(), cells.end(), 0);
        rng.shuffle(std::span<int>(cells));
        for (int k = 0; k < n_gt; ++k) {
            const int cx = (cells[k] % 4) * 50, cy = (cells[k] / 4) * 50;
            const int x0 = cx + static_cast<int>(rng.between(0, 10)), y0 = cy + static_cast<int>(rng.between(0, 10));
            const int bw = static_cast<int>(rng.between(12, 44 - (x0 - cx) + 1));
            const int bh = static_cast<int>(rng.between(12, 44 - (y0 - cy) + 1));
            gts.push_back({x0, y0, std::min(x0 + bw, cx + 49), std::min(y0 + bh, cy + 49)});
            d.gts.push_back({id, gts.back()});
        }
        const int n_pred = static_cast<int>(rng.between(0, max_boxes));
        for (int k = 0; k < n_pred; ++k) {
            BBox b;
            if (!gts.empty() && rng.uniform01() < 0.7) {
                const auto& g = gts[rng.below(gts.size())];
                const int j = static_cast<int>(g.width() / 3 + 1);
                b = {g.x_min + static_cast<int>(rng.between(-j, j)), g.y_min + static_cast<int>(rng.between(-j, j)),
                     g.x_max + static_cast<int>(rng.between(-j, j)), g.y_max + static_cast<int>(rng.between(-j, j))};
                if (!b.valid()) b = g;
            } else {
                const int x0 = static_cast<int>(rng.between(0, 180)), y0 = static_cast<int>(rng.between(0, 180));
                b = {x0, y0, x0 + static_cast<int>(rng.between(5, 60)), y0 + static_cast<int>(rng.between(5, 60))};
            }
            // Confidences on a coarse grid so ties occur.
            d.preds.push_back({id, b, static_cast<double>(rng.between(0, 20)) / 20.0});
        }
    }
    return d;
}

/// Writes `n` synthetic mammograms (16-bit PGM) with lesion masks and a
/// manifest into `dir`; returns the manifest path.
inline fs::path write_dataset(const fs::path& dir, int n, std::uint64_t seed, int w = 240, int h = 300) {
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "masks");
    mammo::pipeline::Manifest man;
    for (int i = 0; i < n; ++i) {
        const auto m = mammogram(w, h, mammo::derive_seed(seed, i), 1 + i % 2);
        mammo::pipeline::ManifestEntry e;
        e.id = "case" + std::to_string(i);
        e.image = dir / "images" / (e.id + ".pgm");
        mammo::io::write_pgm(e.image, m.image);
        e.boxes = m.boxes;
        for (std::size_t k = 0; k < m.masks.size(); ++k) {
            e.masks.push_back(dir / "masks" / (e.id + "_" + std::to_string(k) + ".png"));
            mammo::io::write_mask(e.masks.back(), m.masks[k]);
        }
        e.split = "train";
        e.breast_id = "breast" + std::to_string(i / 2);
        man.entries.push_back(std::move(e));
    }
    const auto path = dir / "manifest.json";
    mammo::pipeline::save_manifest(path, man);
    return path;
}

/// Every regular file under `root` with its bytes, keyed by relative path.
inline std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        out[fs::relative(e.path(), root).generic_string()] =
            std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    return out;
}

}  // namespace fixture
