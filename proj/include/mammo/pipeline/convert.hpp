#pragma once

// Builds a manifest from the two source layouts.
//
// inbreast:
//   <root>/images/<stem>.{png,pgm}
//   <root>/annotations/<stem>.json   optional; {"boxes": [[x0,y0,x1,y1],...],
//                                     "masks": ["rel/path.png", ...],
//                                     "breast_id": "..."}
//   Images without an annotation file become normal (box-free) entries.
//
// ddsm:
//   <root>/<case>/<image>.{png,pgm}
//   <root>/<case>/<image>_mask<k>.png   one per lesion; boxes are the masks' tight boxes
//   breast_id is <case>_LEFT / <case>_RIGHT when the image name carries the
//   side, <case>_<image> otherwise.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <string>
#include <vector>

#include "mammo/core/bbox.hpp"
#include "mammo/error.hpp"
#include "mammo/io/image_io.hpp"
#include "mammo/pipeline/manifest.hpp"

namespace mammo::pipeline {

namespace detail {

inline bool is_image_file(const fs::path& p) {
    const auto ext = io::detail::lower_ext(p);
    return fs::is_regular_file(p) && (ext == ".png" || ext == ".pgm");
}

inline std::vector<fs::path> sorted_children(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& d : fs::directory_iterator(dir)) out.push_back(d.path());
    std::sort(out.begin(), out.end());
    return out;
}

inline std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace detail

inline Manifest convert_inbreast(const fs::path& root) {
    const auto images = root / "images";
    if (!fs::is_directory(images)) throw IoError("inbreast layout needs " + images.string());
    Manifest m;
    for (const auto& p : detail::sorted_children(images)) {
        if (!detail::is_image_file(p)) continue;
        ManifestEntry e;
        e.id = p.stem().string();
        e.image = fs::absolute(p);
        e.breast_id = e.id;
        const auto ann = root / "annotations" / (e.id + ".json");
        if (fs::exists(ann)) {
            const auto j = read_json_file(ann);
            const std::string where = ann.string();
            if (!j.is_object()) throw ParameterError(where + ": expected an object");
            if (j.contains("boxes")) {
                for (const auto& b : j["boxes"]) e.boxes.push_back(parse_box(b, where));
            }
            if (j.contains("masks")) {
                for (const auto& mp : j["masks"]) e.masks.push_back(fs::absolute(ann.parent_path() / mp.get<std::string>()));
            }
            if (!e.masks.empty() && e.masks.size() != e.boxes.size()) {
                throw ParameterError(where + ": mask count differs from box count");
            }
            e.breast_id = j.value("breast_id", e.id);
        }
        m.entries.push_back(std::move(e));
    }
    return m;
}

inline Manifest convert_ddsm(const fs::path& root) {
    if (!fs::is_directory(root)) throw IoError("ddsm layout root is not a directory: " + root.string());
    Manifest m;
    for (const auto& case_dir : detail::sorted_children(root)) {
        if (!fs::is_directory(case_dir)) continue;
        const std::string case_id = case_dir.filename().string();
        for (const auto& p : detail::sorted_children(case_dir)) {
            if (!detail::is_image_file(p)) continue;
            const std::string stem = p.stem().string();
            if (stem.find("_mask") != std::string::npos) continue;
            ManifestEntry e;
            e.id = case_id + "_" + stem;
            e.image = fs::absolute(p);
            const auto up = detail::upper(stem);
            e.breast_id = up.find("LEFT") != std::string::npos    ? case_id + "_LEFT"
                          : up.find("RIGHT") != std::string::npos ? case_id + "_RIGHT"
                                                                  : e.id;
            for (int k = 1;; ++k) {
                const auto mp = case_dir / (stem + "_mask" + std::to_string(k) + ".png");
                if (!fs::exists(mp)) break;
                const auto box = tight_bbox(io::read_mask(mp));
                if (!box) throw ParameterError(mp.string() + ": empty lesion mask");
                e.boxes.push_back(*box);
                e.masks.push_back(fs::absolute(mp));
            }
            m.entries.push_back(std::move(e));
        }
    }
    return m;
}

}  // namespace mammo::pipeline
