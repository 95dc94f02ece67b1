// mammo: command-line front end.
//
//   mammo [--seed S] [--jobs J] [--out DIR] [--config FILE] <subcommand> ...
//
// Exit status: 0 on success, 1 on runtime errors or per-item failures,
// 2 on usage errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mammo/mammo.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> out;
    std::optional<std::string> config;
};

template <class T>
void override_if(const std::optional<T>& v, T& field) {
    if (v) field = *v;
}

mammo::pipeline::PipelineConfig base_config(const Globals& g) {
    mammo::pipeline::PipelineConfig cfg;
    if (g.config) mammo::pipeline::apply_json(cfg, mammo::pipeline::read_json_file(*g.config));
    override_if(g.seed, cfg.seed);
    override_if(g.jobs, cfg.jobs);
    cfg.scheduler.seed = cfg.seed;
    cfg.elastic.seed = cfg.seed;
    return cfg;
}

fs::path out_dir(const Globals& g, const std::optional<std::string>& positional = std::nullopt) {
    if (positional) return *positional;
    if (g.out) return *g.out;
    return ".";
}

/// Manifest path from a file or a dataset directory holding manifest.json.
fs::path manifest_path(const fs::path& p) {
    return fs::is_directory(p) ? p / "manifest.json" : p;
}

int report_batch(const mammo::pipeline::BatchResult& r, const fs::path& out) {
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& f : r.failures) std::cerr << "failed: " << f.id << ": " << f.error << '\n';
    std::cout << "wrote " << r.manifest.entries.size() << " entries to " << (out / "manifest.json").string();
    if (!r.ok()) std::cout << " (" << r.failures.size() << " failed, see failures.json)";
    std::cout << '\n';
    return r.ok() ? 0 : 1;
}

std::int64_t distinct_images(const std::vector<mammo::eval::Prediction>& preds,
                             const std::vector<mammo::eval::GroundTruth>& gts) {
    std::set<std::string> ids;
    for (const auto& p : preds) ids.insert(p.image_id);
    for (const auto& g : gts) ids.insert(g.image_id);
    return static_cast<std::int64_t>(std::max<std::size_t>(ids.size(), 1));
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mammo::IoError("cannot write " + path.string());
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mammogram mass-detection data toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Seed for every random draw");
    app.add_option("--jobs", g.jobs, "Worker threads for batch commands")->check(CLI::PositiveNumber);
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--config", g.config, "Pipeline config JSON")->check(CLI::ExistingFile);

    // segment
    auto* seg = app.add_subcommand("segment", "Breast mask and ROI of one image");
    std::string seg_in, seg_out;
    std::optional<double> seg_sigma;
    std::optional<std::string> seg_roi;
    seg->add_option("input", seg_in, "Grayscale PGM/PNG")->required();
    seg->add_option("mask", seg_out, "Output mask PNG (full frame)")->required();
    seg->add_option("--sigma", seg_sigma, "Gaussian smoothing before Otsu")->check(CLI::PositiveNumber);
    seg->add_option("--roi", seg_roi, "Also write the cropped ROI image here");

    // normalize
    auto* norm = app.add_subcommand("normalize", "Truncation normalization of one image");
    std::string norm_in, norm_out;
    std::optional<double> norm_low, norm_high, norm_sigma;
    norm->add_option("input", norm_in)->required();
    norm->add_option("output", norm_out, "16-bit PNG, round(v * 65535)")->required();
    norm->add_option("--low", norm_low)->check(CLI::Range(0.0, 1.0));
    norm->add_option("--high", norm_high)->check(CLI::Range(0.0, 1.0));
    norm->add_option("--sigma", norm_sigma)->check(CLI::PositiveNumber);

    // enhance
    auto* enh = app.add_subcommand("enhance", "CLAHE / three-channel synthesis of a normalized image");
    std::string enh_in, enh_out;
    std::optional<double> enh_clip;
    std::optional<int> enh_tx, enh_ty, enh_bins;
    std::optional<std::string> enh_tiles;
    bool enh_split = false;
    enh->add_option("input", enh_in, "Normalized grayscale PNG")->required();
    enh->add_option("output", enh_out, "RGB PNG, or 16-bit gray with --clip")->required();
    enh->add_option("--clip", enh_clip, "Single CLAHE plane at this clip limit")->check(CLI::Range(0.0, 1.0));
    enh->add_option("--tiles", enh_tiles, "Tile grid as COLSxROWS, e.g. 8x8");
    enh->add_option("--tiles-x", enh_tx)->check(CLI::PositiveNumber);
    enh->add_option("--tiles-y", enh_ty)->check(CLI::PositiveNumber);
    enh->add_flag("--split", enh_split, "Also write each plane as <output>_ch<k>.png (16-bit)");
    enh->add_option("--bins", enh_bins)->check(CLI::Range(2, 65536));

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "Segment, normalize, enhance and resize a manifest");
    std::string pre_in;
    std::optional<std::string> pre_out;
    bool pre_no_resize = false;
    pre->add_option("manifest", pre_in, "Manifest JSON or dataset directory")->required();
    pre->add_option("out-dir", pre_out);
    pre->add_flag("--no-resize", pre_no_resize, "Keep the crop resolution");

    // augment
    auto* aug = app.add_subcommand("augment", "Natural-deformation and classic augmentation of a manifest");
    std::string aug_in;
    std::optional<std::string> aug_out;
    std::optional<int> aug_natural, aug_regions, aug_classic, aug_radius;
    std::optional<double> aug_alpha, aug_sigma;
    aug->add_option("dataset", aug_in, "Manifest JSON or dataset directory")->required();
    aug->add_option("out-dir", aug_out);
    aug->add_option("--natural-per-image", aug_natural)->check(CLI::NonNegativeNumber);
    aug->add_option("--non-mass-regions", aug_regions)->check(CLI::NonNegativeNumber);
    aug->add_option("--classic-per-image", aug_classic)->check(CLI::NonNegativeNumber);
    aug->add_option("--inpaint-radius", aug_radius)->check(CLI::PositiveNumber);
    aug->add_option("--alpha", aug_alpha)->check(CLI::NonNegativeNumber);
    aug->add_option("--sigma", aug_sigma)->check(CLI::PositiveNumber);

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "TP / FP / FN, TPR and FPPI at one threshold");
    std::string ev_preds, ev_gts;
    std::optional<double> ev_conf, ev_iou;
    std::optional<std::int64_t> ev_n;
    std::optional<std::string> ev_report;
    ev->add_option("predictions", ev_preds)->required();
    ev->add_option("ground-truth", ev_gts)->required();
    ev->add_option("--conf-th", ev_conf)->check(CLI::Range(0.0, 1.0));
    ev->add_option("--iou-th", ev_iou)->check(CLI::Range(0.0, 1.0));
    ev->add_option("--n-images", ev_n, "Images evaluated (default: distinct ids seen)")
        ->check(CLI::PositiveNumber);
    ev->add_option("--report", ev_report, "Also write the JSON report here");

    // froc
    auto* fr = app.add_subcommand("froc", "FROC curve as CSV and SVG");
    std::string fr_preds, fr_gts;
    std::optional<double> fr_iou;
    std::optional<std::int64_t> fr_n;
    fr->add_option("predictions", fr_preds)->required();
    fr->add_option("ground-truth", fr_gts)->required();
    fr->add_option("--iou-th", fr_iou)->check(CLI::Range(0.0, 1.0));
    fr->add_option("--n-images", fr_n)->check(CLI::PositiveNumber);

    // schedule-sim
    auto* ss = app.add_subcommand("schedule-sim", "Run the dynamic-update scheduler against a mock trainer");
    int ss_samples = 0;
    std::optional<int> ss_swap, ss_final_epochs, ss_max_epochs;
    std::optional<double> ss_ratio, ss_lr, ss_final_frac, ss_hard;
    std::string ss_profile;
    ss->add_option("--samples", ss_samples, "Sample ids are \"0\" .. \"N-1\"")->required()->check(CLI::Range(2, 1 << 24));
    ss->add_option("--swap", ss_swap)->check(CLI::PositiveNumber);
    ss->add_option("--ratio", ss_ratio)->check(CLI::Range(0.0, 1.0));
    ss->add_option("--lr", ss_lr)->check(CLI::PositiveNumber);
    ss->add_option("--final-lr-fraction", ss_final_frac)->check(CLI::Range(0.0, 1.0));
    ss->add_option("--final-epochs", ss_final_epochs)->check(CLI::NonNegativeNumber);
    ss->add_option("--max-epochs", ss_max_epochs)->check(CLI::PositiveNumber);
    ss->add_option("--hard-threshold", ss_hard);
    ss->add_option("--mock-profile", ss_profile, "JSON map sample_id -> per-epoch losses")
        ->required()
        ->check(CLI::ExistingFile);

    // split-folds
    auto* sf = app.add_subcommand("split-folds", "Cross-validation manifests grouped by breast");
    std::string sf_in;
    int sf_folds = 2;
    bool sf_masses = false;
    sf->add_option("manifest", sf_in)->required();
    sf->add_option("--folds", sf_folds)->check(CLI::Range(2, 1000));
    sf->add_flag("--masses-only", sf_masses, "Drop entries without boxes");

    // convert-manifest
    auto* cm = app.add_subcommand("convert-manifest", "Manifest from an INbreast- or DDSM-style layout");
    std::string cm_format, cm_root;
    cm->add_option("--format", cm_format)->required()->check(CLI::IsMember({"inbreast", "ddsm"}));
    cm->add_option("root", cm_root)->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        auto cfg = base_config(g);

        if (*seg) {
            const auto img = mammo::io::read_gray(seg_in);
            const double sigma = seg_sigma.value_or(cfg.segmentation_sigma);
            const auto mask = mammo::breast_mask(img, sigma);
            mammo::io::write_mask(seg_out, mask);
            const auto box = *mammo::tight_bbox(mask);
            if (seg_roi) mammo::io::write_gray(*seg_roi, mammo::crop(img, box));
            std::cout << json{{"origin", {box.x_min, box.y_min}},
                              {"size", {box.width(), box.height()}},
                              {"breast_pixels", mask.count()}}
                             .dump()
                      << '\n';
        } else if (*norm) {
            override_if(norm_low, cfg.truncation.low_fraction);
            override_if(norm_high, cfg.truncation.high_fraction);
            override_if(norm_sigma, cfg.segmentation_sigma);
            const auto roi = mammo::segment_breast(mammo::io::read_gray(norm_in), cfg.segmentation_sigma);
            const auto range = mammo::truncation_percentiles(roi, cfg.truncation);
            mammo::io::write_float_png16(norm_out, mammo::truncate_normalize(roi, cfg.truncation));
            std::cout << json{{"origin", {roi.origin_x, roi.origin_y}},
                              {"p_min", range.p_min},
                              {"p_max", range.p_max}}
                             .dump()
                      << '\n';
        } else if (*enh) {
            if (enh_tiles) {
                int tx = 0, ty = 0;
                char x = 0, rest = 0;
                if (std::sscanf(enh_tiles->c_str(), "%d%c%d%c", &tx, &x, &ty, &rest) != 3 || (x != 'x' && x != 'X') ||
                    tx < 1 || ty < 1) {
                    throw mammo::ParameterError("--tiles expects COLSxROWS, got " + *enh_tiles);
                }
                cfg.clahe.tiles_x = tx;
                cfg.clahe.tiles_y = ty;
            }
            override_if(enh_tx, cfg.clahe.tiles_x);
            override_if(enh_ty, cfg.clahe.tiles_y);
            override_if(enh_bins, cfg.clahe.bins);
            const auto src = mammo::to_float(mammo::io::read_gray(enh_in));
            if (enh_clip) {
                auto c = cfg.clahe;
                c.clip_limit = *enh_clip;
                mammo::io::write_float_png16(enh_out, mammo::clahe(src, c));
            } else {
                const auto planes =
                    mammo::synthesize_channels(src, cfg.clahe.tiles_x, cfg.clahe.tiles_y, cfg.clahe.bins);
                mammo::io::write_rgb_png(enh_out, mammo::to_rgb8(planes));
                if (enh_split) {
                    const fs::path base = fs::path(enh_out).replace_extension();
                    for (std::size_t k = 0; k < planes.channels.size(); ++k) {
                        mammo::io::write_float_png16(base.string() + "_ch" + std::to_string(k) + ".png",
                                                     planes.channels[k]);
                    }
                }
            }
        } else if (*pre) {
            if (pre_no_resize) cfg.resize = false;
            const auto out = out_dir(g, pre_out);
            const auto m = mammo::pipeline::load_manifest(manifest_path(pre_in));
            return report_batch(mammo::pipeline::preprocess_batch(m, cfg, out), out);
        } else if (*aug) {
            override_if(aug_natural, cfg.natural.per_image);
            override_if(aug_regions, cfg.natural.non_mass.count);
            override_if(aug_classic, cfg.classic_per_image);
            override_if(aug_radius, cfg.natural.inpaint_radius);
            override_if(aug_alpha, cfg.elastic.alpha);
            override_if(aug_sigma, cfg.elastic.sigma);
            const auto out = out_dir(g, aug_out);
            const auto m = mammo::pipeline::load_manifest(manifest_path(aug_in));
            return report_batch(mammo::pipeline::augment_batch(m, cfg, out), out);
        } else if (*ev) {
            override_if(ev_conf, cfg.evaluation.conf_th);
            override_if(ev_iou, cfg.evaluation.iou_th);
            const auto preds = mammo::eval::load_predictions(ev_preds);
            const auto gts = mammo::eval::load_ground_truth(ev_gts);
            const auto n = ev_n.value_or(distinct_images(preds, gts));
            const auto r = mammo::eval::match_and_count(preds, gts, cfg.evaluation, n);
            const auto report = mammo::eval::to_json(r);
            std::cout << report.dump(2) << '\n';
            char line[160];
            std::snprintf(line, sizeof line, "TPR %.3f  FPPI %.3f  (TP %lld, FP %lld, FN %lld, %lld images)\n",
                          r.tpr, r.fppi, static_cast<long long>(r.tp), static_cast<long long>(r.fp),
                          static_cast<long long>(r.fn), static_cast<long long>(r.n_images));
            std::cerr << line;
            if (ev_report) write_text(*ev_report, report.dump(2) + "\n");
        } else if (*fr) {
            override_if(fr_iou, cfg.evaluation.iou_th);
            const auto preds = mammo::eval::load_predictions(fr_preds);
            const auto gts = mammo::eval::load_ground_truth(fr_gts);
            const auto n = fr_n.value_or(distinct_images(preds, gts));
            const auto curve = mammo::eval::froc(preds, gts, cfg.evaluation.iou_th, n);
            const auto out = out_dir(g);
            write_text(out / "froc.csv", mammo::eval::froc_csv(curve));
            write_text(out / "froc.svg", mammo::eval::froc_svg(curve));
            std::cout << mammo::eval::froc_csv(curve);
        } else if (*ss) {
            auto sc = cfg.scheduler;
            override_if(ss_swap, sc.swap_count);
            override_if(ss_ratio, sc.initial_split_ratio);
            override_if(ss_lr, sc.initial_lr);
            override_if(ss_final_frac, sc.final_lr_fraction);
            override_if(ss_final_epochs, sc.final_epochs);
            override_if(ss_max_epochs, sc.max_epochs);
            const double hard = ss_hard.value_or(cfg.hard_threshold);
            auto trainer = mammo::sched::MockTrainer::from_json(mammo::pipeline::read_json_file(ss_profile), hard);
            std::vector<std::string> ids;
            for (int i = 0; i < ss_samples; ++i) ids.push_back(std::to_string(i));
            const auto log = mammo::sched::run_schedule(ids, trainer, sc);
            std::string lines;
            for (const auto& e : log.events) lines += mammo::sched::to_json(e).dump() + "\n";
            std::cout << lines;
            if (g.out) write_text(fs::path(*g.out) / "schedule.jsonl", lines);
        } else if (*sf) {
            const auto m = mammo::pipeline::load_manifest(manifest_path(sf_in));
            const auto folds = mammo::pipeline::split_folds(m, sf_folds, cfg.seed, sf_masses);
            const auto out = out_dir(g);
            for (std::size_t f = 0; f < folds.size(); ++f) {
                const auto path = out / ("fold" + std::to_string(f) + ".json");
                mammo::pipeline::save_manifest(path, folds[f]);
                std::size_t test = 0;
                for (const auto& e : folds[f].entries) test += e.split == "test";
                std::cout << path.string() << ": " << test << " test / " << folds[f].entries.size() - test
                          << " train\n";
            }
        } else if (*cm) {
            const auto m = cm_format == "inbreast" ? mammo::pipeline::convert_inbreast(cm_root)
                                                   : mammo::pipeline::convert_ddsm(cm_root);
            const auto path = out_dir(g) / "manifest.json";
            mammo::pipeline::save_manifest(path, m);
            std::cout << "wrote " << m.entries.size() << " entries to " << path.string() << '\n';
        }
    } catch (const mammo::ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
