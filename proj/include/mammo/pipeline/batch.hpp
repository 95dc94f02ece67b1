#pragma once

// Manifest-driven batch stages.
//
// preprocess_batch writes into <out>:
//   images/<name>.png        RGB: normalized, CLAHE 0.01, CLAHE 0.02
//   masks/<name>_<j>.png     lesion masks in the same frame
//   manifest.json            boxes in output coordinates
//   provenance.json          parameters plus per-image origin / scale / percentiles
//   failures.json            only when some entry failed
//
// augment_batch writes the same layout with audit.json instead of
// provenance.json. Variant ids are <id>__nat<k> and <id>__cls<m>.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mammo/augmentation/classic.hpp"
#include "mammo/augmentation/natural_deform.hpp"
#include "mammo/augmentation/resize.hpp"
#include "mammo/enhancement.hpp"
#include "mammo/io/image_io.hpp"
#include "mammo/normalization.hpp"
#include "mammo/pipeline/config.hpp"
#include "mammo/pipeline/manifest.hpp"
#include "mammo/pipeline/worker_pool.hpp"
#include "mammo/random.hpp"

namespace mammo::pipeline {

struct ItemFailure {
    std::string id;
    std::string image;
    std::string error;
};

struct BatchResult {
    Manifest manifest;
    std::vector<ItemFailure> failures;
    std::vector<std::string> warnings;
    nlohmann::json record;  // provenance or audit, as written

    bool ok() const { return failures.empty(); }
};

/// Id made safe for a file name: anything outside [A-Za-z0-9._-] becomes '_'.
inline std::string file_stem_for(const std::string& id) {
    std::string s = id;
    for (char& c : s) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                          c == '.' || c == '_' || c == '-';
        if (!keep) c = '_';
    }
    return s;
}

namespace detail {

inline void check_unique_stems(const Manifest& m) {
    std::set<std::string> stems;
    for (const auto& e : m.entries) {
        if (!stems.insert(file_stem_for(e.id)).second) {
            throw ParameterError("ids collide after file-name sanitizing: " + e.id);
        }
    }
}

inline void write_failures(const fs::path& out_dir, const std::vector<ItemFailure>& failures) {
    const auto path = out_dir / "failures.json";
    if (failures.empty()) {
        fs::remove(path);
        return;
    }
    nlohmann::json j = nlohmann::json::array();
    for (const auto& f : failures) j.push_back({{"id", f.id}, {"image", f.image}, {"error", f.error}});
    write_json_file(path, {{"failures", j}});
}

struct ItemOutcome {
    std::vector<ManifestEntry> entries;
    nlohmann::json record;
    std::vector<std::string> warnings;
    std::optional<std::string> error;
};

template <class F>
BatchResult run_items(const Manifest& in, const PipelineConfig& cfg, const fs::path& out_dir, F&& per_item,
                      const char* record_key, const char* record_file) {
    cfg.validate();
    check_unique_stems(in);
    fs::create_directories(out_dir / "images");
    fs::create_directories(out_dir / "masks");
    std::vector<ItemOutcome> outcomes(in.entries.size());
    parallel_for(in.entries.size(), cfg.jobs, [&](std::size_t i) {
        try {
            outcomes[i] = per_item(i, in.entries[i]);
        } catch (const std::exception& e) {
            outcomes[i] = ItemOutcome{};
            outcomes[i].error = e.what();
        }
    });

    BatchResult r;
    nlohmann::json items = nlohmann::json::array();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto& o = outcomes[i];
        for (auto& w : o.warnings) r.warnings.push_back(in.entries[i].id + ": " + w);
        if (o.error) {
            r.failures.push_back({in.entries[i].id, relative_to(in.entries[i].image, out_dir), *o.error});
            continue;
        }
        for (auto& e : o.entries) r.manifest.entries.push_back(std::move(e));
        items.push_back(std::move(o.record));
    }
    auto config = to_json(cfg);
    config.erase("jobs");
    r.record = {{"config", config}, {record_key, items}};
    save_manifest(out_dir / "manifest.json", r.manifest);
    write_json_file(out_dir / record_file, r.record);
    write_failures(out_dir, r.failures);
    return r;
}

inline nlohmann::json boxes_json(const std::vector<BBox>& boxes) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& b : boxes) j.push_back(box_to_json(b));
    return j;
}

}  // namespace detail

/// Per entry: segment, truncate-normalize, build the three planes, resize
/// for the model. Boxes follow (box - crop origin) * scale; masks are cropped
/// and resized nearest-neighbour. Failed entries are reported, not fatal.
inline BatchResult preprocess_batch(const Manifest& in, const PipelineConfig& cfg, const fs::path& out_dir) {
    auto item = [&](std::size_t, const ManifestEntry& e) {
        detail::ItemOutcome o;
        const auto img = io::read_gray(e.image);
        const auto roi = segment_breast(img, cfg.segmentation_sigma);
        const auto range = truncation_percentiles(roi, cfg.truncation);
        const auto norm = truncate_normalize(roi, cfg.truncation);
        const auto planes = synthesize_channels(norm, cfg.clahe.tiles_x, cfg.clahe.tiles_y, cfg.clahe.bins);
        const int cw = roi.image.width(), ch = roi.image.height();
        const BBox crop_box{roi.origin_x, roi.origin_y, roi.origin_x + cw, roi.origin_y + ch};

        std::vector<BBox> boxes;
        std::vector<BinaryMask> masks;
        nlohmann::json dropped = nlohmann::json::array();
        for (std::size_t j = 0; j < e.boxes.size(); ++j) {
            const auto clipped = clip_bbox(roi.to_crop(e.boxes[j]), cw, ch);
            if (!clipped) {
                o.warnings.push_back("box " + std::to_string(j) + " lies outside the breast crop; dropped");
                dropped.push_back(j);
                continue;
            }
            boxes.push_back(*clipped);
            if (e.has_masks()) {
                const auto m = io::read_mask(e.masks[j]);
                require_same_shape(img, m, "lesion mask " + e.masks[j].string());
                masks.push_back(crop(m, crop_box));
            }
        }

        Resized<ThreeChannelImage> sized{planes, boxes, 1.0};
        if (cfg.resize) sized = resize_for_model(planes, boxes);
        if (sized.scale != 1.0) {
            for (auto& m : masks) m = resize_nearest(m, sized.image.width(), sized.image.height(), sized.scale);
        }

        const std::string stem = file_stem_for(e.id);
        ManifestEntry out{e.id, out_dir / "images" / (stem + ".png"), sized.boxes, {}, e.split, e.breast_id};
        io::write_rgb_png(out.image, to_rgb8(sized.image));
        for (std::size_t j = 0; j < masks.size(); ++j) {
            out.masks.push_back(out_dir / "masks" / (stem + "_" + std::to_string(j) + ".png"));
            io::write_mask(out.masks.back(), masks[j]);
        }
        nlohmann::json mask_files = nlohmann::json::array();
        for (const auto& mp : out.masks) mask_files.push_back(relative_to(mp, out_dir));
        o.record = {{"id", e.id},
                    {"source", relative_to(e.image, out_dir)},
                    {"image", relative_to(out.image, out_dir)},
                    {"masks", mask_files},
                    {"origin", {roi.origin_x, roi.origin_y}},
                    {"crop_size", {cw, ch}},
                    {"p_min", range.p_min},
                    {"p_max", range.p_max},
                    {"scale", sized.scale},
                    {"output_size", {sized.image.width(), sized.image.height()}},
                    {"boxes", detail::boxes_json(out.boxes)},
                    {"dropped_boxes", dropped}};
        o.entries.push_back(std::move(out));
        return o;
    };
    return detail::run_items(in, cfg, out_dir, item, "images", "provenance.json");
}

namespace detail {

inline void write_sample(const AugmentSample& s, int bit_depth, const fs::path& image, bool with_masks,
                         const fs::path& out_dir, const std::string& stem, ManifestEntry& entry) {
    io::write_planes(image, io::PlaneImage{s.channels, bit_depth});
    entry.image = image;
    entry.boxes = s.boxes;
    entry.masks.clear();
    if (!with_masks) return;
    for (std::size_t j = 0; j < s.lesion_masks.size(); ++j) {
        entry.masks.push_back(out_dir / "masks" / (stem + "_" + std::to_string(j) + ".png"));
        io::write_mask(entry.masks.back(), s.lesion_masks[j]);
    }
}

inline nlohmann::json files_json(const ManifestEntry& e, const fs::path& out_dir) {
    nlohmann::json masks = nlohmann::json::array();
    for (const auto& m : e.masks) masks.push_back(relative_to(m, out_dir));
    return {{"image", relative_to(e.image, out_dir)}, {"masks", masks}, {"boxes", boxes_json(e.boxes)}};
}

}  // namespace detail

/// Per entry: copies the original, then writes `natural.per_image` natural
/// deformation variants (every lesion, then random non-mass discs) and
/// `classic_per_image` classic variants. Entry i draws from
/// derive_seed(seed, i); its variant v from derive_seed(that, v).
inline BatchResult augment_batch(const Manifest& in, const PipelineConfig& cfg, const fs::path& out_dir) {
    auto item = [&](std::size_t index, const ManifestEntry& e) {
        detail::ItemOutcome o;
        const std::uint64_t entry_seed = derive_seed(cfg.seed, index);
        const std::string stem = file_stem_for(e.id);
        const auto src = io::read_planes(e.image);
        std::vector<BinaryMask> masks;
        for (const auto& mp : e.masks) {
            masks.push_back(io::read_mask(mp));
            require_same_shape(src.planes.front(), masks.back(), "lesion mask " + mp.string());
        }

        // Original, byte for byte.
        ManifestEntry original = e;
        original.image = out_dir / "images" / (stem + e.image.extension().string());
        fs::copy_file(e.image, original.image, fs::copy_options::overwrite_existing);
        original.masks.clear();
        for (std::size_t j = 0; j < e.masks.size(); ++j) {
            original.masks.push_back(out_dir / "masks" / (stem + "_" + std::to_string(j) + e.masks[j].extension().string()));
            fs::copy_file(e.masks[j], original.masks.back(), fs::copy_options::overwrite_existing);
        }
        nlohmann::json variants = nlohmann::json::array();
        o.entries.push_back(original);

        const int w = src.planes.front().width(), h = src.planes.front().height();
        const bool masks_missing = !e.boxes.empty() && e.masks.empty();
        AugmentSample base{src.planes, masks, {}};
        base.refresh_boxes();

        const int natural = cfg.natural.per_image;
        if (natural > 0 && masks_missing) {
            o.warnings.push_back("entry has boxes but no masks; natural deformation skipped");
        } else if (natural > 0) {
            BinaryMask breast(w, h);
            try {
                breast = breast_mask(to_gray(src.planes.front(), 16), cfg.segmentation_sigma);
            } catch (const Error& err) {
                o.warnings.push_back(std::string("no breast mask, non-mass regions skipped: ") + err.what());
            }
            const int guard = static_cast<int>(std::ceil(cfg.elastic.alpha)) + cfg.natural.inpaint_radius;
            BinaryMask keep_out(w, h);
            for (const auto& m : base.lesion_masks) keep_out = keep_out | m;
            keep_out = dilate(keep_out, guard);

            for (int k = 0; k < natural; ++k) {
                const std::uint64_t vseed = derive_seed(entry_seed, static_cast<std::uint64_t>(k));
                AugmentSample cur = base;
                nlohmann::json regions = nlohmann::json::array();
                const auto deform = [&](const BinaryMask& target, std::uint64_t rseed, nlohmann::json desc) {
                    ElasticParams p = cfg.elastic;
                    p.seed = rseed;
                    desc["seed"] = rseed;
                    try {
                        cur = natural_deform(cur, target, p, cfg.natural.inpaint_radius);
                        desc["status"] = "applied";
                    } catch (const DeformationOutOfBoundsError&) {
                        desc["status"] = "skipped_out_of_frame";
                    }
                    regions.push_back(std::move(desc));
                };
                const std::uint64_t lesion_stream = derive_seed(vseed, 0);
                for (std::size_t j = 0; j < base.lesion_masks.size(); ++j) {
                    const BinaryMask target = cur.lesion_masks[j];
                    deform(target, derive_seed(lesion_stream, j), {{"kind", "lesion"}, {"lesion", j}});
                }
                Rng rng(derive_seed(vseed, 1));
                const auto discs = sample_non_mass_regions(breast, {keep_out}, cfg.natural.non_mass, rng);
                const std::uint64_t disc_stream = derive_seed(vseed, 2);
                for (std::size_t d = 0; d < discs.size(); ++d) {
                    deform(disc_mask(w, h, discs[d]), derive_seed(disc_stream, d),
                           {{"kind", "non_mass"}, {"center", {discs[d].cx, discs[d].cy}}, {"radius", discs[d].radius}});
                }
                const std::string vid = e.id + "__nat" + std::to_string(k);
                const std::string vstem = file_stem_for(vid);
                ManifestEntry v{vid, {}, {}, {}, e.split, e.breast_id};
                detail::write_sample(cur, src.bit_depth, out_dir / "images" / (vstem + ".png"), true, out_dir,
                                     vstem, v);
                auto rec = detail::files_json(v, out_dir);
                rec.update({{"id", vid}, {"kind", "natural"}, {"seed", vseed}, {"regions", regions}});
                variants.push_back(std::move(rec));
                o.entries.push_back(std::move(v));
            }
        }

        if (cfg.classic_per_image > 0) {
            AugmentSample cbase = base;
            if (masks_missing) {
                for (const auto& b : e.boxes) cbase.lesion_masks.push_back(box_mask(w, h, b));
                cbase.refresh_boxes();
            }
            for (int m = 0; m < cfg.classic_per_image; ++m) {
                const std::uint64_t vseed = derive_seed(entry_seed, static_cast<std::uint64_t>(natural + m));
                Rng rng(vseed);
                const auto c = draw_classic_config(cfg.classic, rng);
                const auto out = classic_augment(cbase, c);
                const std::string vid = e.id + "__cls" + std::to_string(m);
                const std::string vstem = file_stem_for(vid);
                ManifestEntry v{vid, {}, {}, {}, e.split, e.breast_id};
                detail::write_sample(out, src.bit_depth, out_dir / "images" / (vstem + ".png"), !masks_missing,
                                     out_dir, vstem, v);
                auto rec = detail::files_json(v, out_dir);
                rec.update({{"id", vid},
                            {"kind", "classic"},
                            {"seed", vseed},
                            {"transform",
                             {{"rotation_deg", c.rotation_deg},
                              {"translate_x", c.translate_x},
                              {"translate_y", c.translate_y},
                              {"shear_deg", c.shear_deg},
                              {"scale", c.scale},
                              {"hflip", c.hflip},
                              {"vflip", c.vflip}}}});
                variants.push_back(std::move(rec));
                o.entries.push_back(std::move(v));
            }
        }

        auto rec = detail::files_json(original, out_dir);
        rec.update({{"id", e.id}, {"source", relative_to(e.image, out_dir)}, {"seed", entry_seed}, {"variants", variants}});
        o.record = std::move(rec);
        return o;
    };
    return detail::run_items(in, cfg, out_dir, item, "entries", "audit.json");
}

}  // namespace mammo::pipeline
