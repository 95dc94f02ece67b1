#pragma once

// Dataset manifest: one JSON file listing images, boxes and lesion masks.
//
//   {"entries": [
//     {"id": "img01", "image": "images/img01.png",
//      "boxes": [[x_min, y_min, x_max, y_max], ...],
//      "masks": ["masks/img01_0.png", ...],      // optional, one per box
//      "split": "train",                         // optional
//      "breast_id": "p01_L"}                     // optional, defaults to id
//   ]}
//
// Paths are relative to the manifest's directory.

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mammo/core/bbox.hpp"
#include "mammo/error.hpp"

namespace mammo::pipeline {

namespace fs = std::filesystem;

struct ManifestEntry {
    std::string id;
    fs::path image;               // absolute once loaded
    std::vector<BBox> boxes;
    std::vector<fs::path> masks;  // empty or one per box
    std::string split;
    std::string breast_id;

    bool has_masks() const { return !masks.empty(); }
};

struct Manifest {
    std::vector<ManifestEntry> entries;
};

inline nlohmann::json read_json_file(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("no such file: " + path.string());
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path.string() + ": invalid JSON: " + e.what());
    }
}

/// Pretty-printed, newline-terminated; keys come out sorted so reruns match
/// byte for byte.
inline void write_json_file(const fs::path& path, const nlohmann::json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

inline BBox parse_box(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4) throw ParameterError(where + ": box must be [x_min, y_min, x_max, y_max]");
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw ParameterError(where + ": box coordinates must be integers");
    }
    const BBox b{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
    if (!b.valid()) throw ParameterError(where + ": box must satisfy x_min < x_max and y_min < y_max");
    return b;
}

inline nlohmann::json box_to_json(const BBox& b) { return {b.x_min, b.y_min, b.x_max, b.y_max}; }

inline ManifestEntry parse_entry(const nlohmann::json& j, const fs::path& base, const std::string& where) {
    if (!j.is_object()) throw ParameterError(where + ": entry must be an object");
    if (!j.contains("image") || !j["image"].is_string()) throw ParameterError(where + ": missing \"image\"");
    ManifestEntry e;
    e.image = (base / j["image"].get<std::string>()).lexically_normal();
    e.id = j.value("id", e.image.stem().string());
    if (e.id.empty()) throw ParameterError(where + ": empty id");
    e.split = j.value("split", std::string());
    e.breast_id = j.value("breast_id", e.id);
    if (j.contains("boxes")) {
        for (const auto& b : j["boxes"]) e.boxes.push_back(parse_box(b, where));
    }
    if (j.contains("masks")) {
        for (const auto& m : j["masks"]) {
            if (!m.is_string()) throw ParameterError(where + ": mask paths must be strings");
            e.masks.push_back((base / m.get<std::string>()).lexically_normal());
        }
    }
    if (!e.masks.empty() && e.masks.size() != e.boxes.size()) {
        throw ParameterError(where + ": " + std::to_string(e.masks.size()) + " masks for " +
                             std::to_string(e.boxes.size()) + " boxes");
    }
    return e;
}

/// Loads and validates a manifest. With `check_files`, every referenced
/// image and mask must exist.
inline Manifest load_manifest(const fs::path& path, bool check_files = true) {
    const auto j = read_json_file(path);
    if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array()) {
        throw ParameterError(path.string() + ": expected {\"entries\": [...]}");
    }
    const fs::path base = fs::absolute(path).parent_path();
    Manifest m;
    std::set<std::string> ids;
    for (std::size_t i = 0; i < j["entries"].size(); ++i) {
        const std::string where = path.string() + " entry " + std::to_string(i);
        auto e = parse_entry(j["entries"][i], base, where);
        if (!ids.insert(e.id).second) throw ParameterError(where + ": duplicate id " + e.id);
        if (check_files) {
            if (!fs::exists(e.image)) throw IoError(where + ": missing image " + e.image.string());
            for (const auto& mp : e.masks) {
                if (!fs::exists(mp)) throw IoError(where + ": missing mask " + mp.string());
            }
        }
        m.entries.push_back(std::move(e));
    }
    return m;
}

/// Path as written into a manifest stored in `dir`.
inline std::string relative_to(const fs::path& p, const fs::path& dir) {
    const auto rel = fs::absolute(p).lexically_normal().lexically_relative(fs::absolute(dir).lexically_normal());
    return (rel.empty() ? p : rel).generic_string();
}

inline nlohmann::json entry_to_json(const ManifestEntry& e, const fs::path& dir) {
    nlohmann::json j{{"id", e.id}, {"image", relative_to(e.image, dir)}, {"boxes", nlohmann::json::array()}};
    for (const auto& b : e.boxes) j["boxes"].push_back(box_to_json(b));
    if (!e.masks.empty()) {
        j["masks"] = nlohmann::json::array();
        for (const auto& mp : e.masks) j["masks"].push_back(relative_to(mp, dir));
    }
    if (!e.split.empty()) j["split"] = e.split;
    if (e.breast_id != e.id) j["breast_id"] = e.breast_id;
    return j;
}

inline nlohmann::json manifest_to_json(const Manifest& m, const fs::path& dir) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : m.entries) entries.push_back(entry_to_json(e, dir));
    return {{"entries", entries}};
}

inline void save_manifest(const fs::path& path, const Manifest& m) {
    write_json_file(path, manifest_to_json(m, fs::absolute(path).parent_path()));
}

}  // namespace mammo::pipeline
