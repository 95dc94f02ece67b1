#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <set>

#include "mammo/io/image_io.hpp"
#include "mammo/pipeline/batch.hpp"
#include "mammo/pipeline/config.hpp"
#include "mammo/pipeline/convert.hpp"
#include "mammo/pipeline/folds.hpp"
#include "mammo/pipeline/manifest.hpp"
#include "mammo/pipeline/worker_pool.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace mammo;
using namespace mammo::pipeline;
using nlohmann::json;

namespace {

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

PipelineConfig small_config() {
    PipelineConfig c;
    c.seed = 17;
    c.resize = false;
    c.elastic.alpha = 6.0;
    c.elastic.sigma = 3.0;
    c.natural.non_mass = {1, 6, 12, 200};
    return c;
}

}  // namespace

TEST(Manifest, RoundTrip) {
    fixture::TempDir dir("manifest");
    const auto path = fixture::write_dataset(dir.path() / "data", 3, 1, 80, 100);
    const auto m = load_manifest(path);
    ASSERT_EQ(m.entries.size(), 3u);
    EXPECT_TRUE(m.entries[0].image.is_absolute());
    EXPECT_EQ(m.entries[1].masks.size(), m.entries[1].boxes.size());
    EXPECT_EQ(m.entries[0].breast_id, "breast0");
    save_manifest(dir.path() / "data" / "copy.json", m);
    const auto again = load_manifest(dir.path() / "data" / "copy.json");
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        EXPECT_EQ(again.entries[i].id, m.entries[i].id);
        EXPECT_EQ(again.entries[i].image, m.entries[i].image);
        EXPECT_EQ(again.entries[i].boxes, m.entries[i].boxes);
        EXPECT_EQ(again.entries[i].masks, m.entries[i].masks);
    }
    const auto text = read_json_file(path).dump();
    EXPECT_EQ(text.find(dir.path().string()), std::string::npos);
}

TEST(Manifest, DefaultsAndErrors) {
    fixture::TempDir dir("manifest_err");
    write_text(dir / "a.json", R"({"entries": [{"image": "x/img7.pgm"}]})");
    const auto m = load_manifest(dir / "a.json", false);
    EXPECT_EQ(m.entries[0].id, "img7");
    EXPECT_EQ(m.entries[0].breast_id, "img7");
    EXPECT_THROW(load_manifest(dir / "a.json"), IoError);
    EXPECT_THROW(load_manifest(dir / "none.json"), IoError);
    write_text(dir / "b.json", R"({"entries": [{"image": "a.pgm"}, {"image": "b/a.pgm"}]})");
    EXPECT_THROW(load_manifest(dir / "b.json", false), ParameterError);
    write_text(dir / "c.json", R"({"entries": [{"image": "a.pgm", "boxes": [[5, 0, 5, 9]]}]})");
    EXPECT_THROW(load_manifest(dir / "c.json", false), ParameterError);
    write_text(dir / "d.json", R"({"entries": [{"image": "a.pgm", "boxes": [[0, 0, 5, 9]], "masks": []}]})");
    EXPECT_NO_THROW(load_manifest(dir / "d.json", false));
    write_text(dir / "e.json", R"({"entries": [{"image": "a.pgm", "boxes": [], "masks": ["m.png"]}]})");
    EXPECT_THROW(load_manifest(dir / "e.json", false), ParameterError);
    write_text(dir / "f.json", R"([1, 2])");
    EXPECT_THROW(load_manifest(dir / "f.json", false), ParameterError);
}

TEST(Config, ApplyJson) {
    PipelineConfig c;
    apply_json(c, json::parse(R"({"seed": 9, "truncation": {"low": 0.1}, "clahe": {"tiles_x": 4},
                                   "scheduler": {"swap_count": 5, "ratio": 0.7}, "natural": {"per_image": 2}})"));
    EXPECT_EQ(c.seed, 9u);
    EXPECT_DOUBLE_EQ(c.truncation.low_fraction, 0.1);
    EXPECT_DOUBLE_EQ(c.truncation.high_fraction, 0.01);
    EXPECT_EQ(c.clahe.tiles_x, 4);
    EXPECT_EQ(c.clahe.tiles_y, 8);
    EXPECT_EQ(c.scheduler.swap_count, 5);
    EXPECT_DOUBLE_EQ(c.scheduler.initial_split_ratio, 0.7);
    EXPECT_EQ(c.natural.per_image, 2);
    PipelineConfig back;
    apply_json(back, to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, RejectsUnknownAndMistyped) {
    PipelineConfig c;
    EXPECT_THROW(apply_json(c, json::parse(R"({"sed": 1})")), ParameterError);
    EXPECT_THROW(apply_json(c, json::parse(R"({"clahe": {"clip": 0.3}})")), ParameterError);
    EXPECT_THROW(apply_json(c, json::parse(R"({"jobs": "four"})")), ParameterError);
    EXPECT_THROW(apply_json(c, json::parse(R"({"resize": 1})")), ParameterError);
    c.jobs = 0;
    EXPECT_THROW(c.validate(), ParameterError);
}

TEST(WorkerPool, VisitsEveryIndexOnce) {
    for (int jobs : {1, 2, 8}) {
        std::vector<std::atomic<int>> hits(257);
        parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i]++; });
        for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
        if (i == 4) throw std::runtime_error("boom");
    }), std::runtime_error);
}

TEST(FileStem, Sanitizes) {
    EXPECT_EQ(file_stem_for("a/b c:d"), "a_b_c_d");
    EXPECT_EQ(file_stem_for("ok-1.2_x"), "ok-1.2_x");
}

TEST(Preprocess, EmptyManifest) {
    fixture::TempDir dir("pre_empty");
    const auto r = preprocess_batch(Manifest{}, PipelineConfig{}, dir / "out");
    EXPECT_TRUE(r.ok());
    EXPECT_TRUE(r.manifest.entries.empty());
    EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));
    EXPECT_TRUE(load_manifest(dir / "out" / "manifest.json").entries.empty());
}

TEST(Preprocess, BoxesFollowCropAndScale) {
    fixture::TempDir dir("pre_boxes");
    const auto in = load_manifest(fixture::write_dataset(dir / "data", 4, 3, 120, 150));
    PipelineConfig cfg;
    cfg.seed = 3;
    const auto r = preprocess_batch(in, cfg, dir / "out");
    ASSERT_TRUE(r.ok());
    ASSERT_EQ(r.manifest.entries.size(), 4u);
    const auto prov = read_json_file(dir / "out" / "provenance.json");
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& rec = prov.at("images")[i];
        const auto& out = r.manifest.entries[i];
        const int ox = rec.at("origin")[0], oy = rec.at("origin")[1];
        const int cw = rec.at("crop_size")[0], ch = rec.at("crop_size")[1];
        const double s = rec.at("scale");
        EXPECT_DOUBLE_EQ(s, model_input_scale(cw, ch));
        const int ow = rec.at("output_size")[0], oh = rec.at("output_size")[1];
        const auto img = io::read_planes(out.image);
        EXPECT_EQ(img.planes.size(), 3u);
        EXPECT_EQ(img.planes[0].width(), ow);
        EXPECT_EQ(img.planes[0].height(), oh);
        ASSERT_EQ(out.boxes.size(), in.entries[i].boxes.size());
        for (std::size_t k = 0; k < out.boxes.size(); ++k) {
            const auto& b = in.entries[i].boxes[k];
            const BBox local{b.x_min - ox, b.y_min - oy, b.x_max - ox, b.y_max - oy};
            const BBox expect = scale_box(*clip_bbox(local, cw, ch), s, ow, oh);
            EXPECT_EQ(out.boxes[k], expect);
            const auto mask = io::read_mask(out.masks[k]);
            EXPECT_EQ(mask.width(), ow);
            EXPECT_LE(std::abs(oracle::tight_box(mask)->x_min - expect.x_min), static_cast<int>(std::ceil(s)) + 1);
        }
        // The lesion boxes are inside the crop, which excludes the nameplate.
        EXPECT_LE(ox + cw, 120);
    }
}

TEST(Preprocess, FailuresAreReportedNotFatal) {
    fixture::TempDir dir("pre_fail");
    auto in = load_manifest(fixture::write_dataset(dir / "data", 2, 5, 80, 100));
    ManifestEntry bad;
    bad.id = "black";
    bad.image = dir / "data" / "black.pgm";
    bad.breast_id = "black";
    io::write_pgm(bad.image, GrayImage(40, 40, 16));
    in.entries.push_back(bad);
    const auto r = preprocess_batch(in, PipelineConfig{}, dir / "out");
    ASSERT_EQ(r.failures.size(), 1u);
    EXPECT_EQ(r.failures[0].id, "black");
    EXPECT_EQ(r.manifest.entries.size(), 2u);
    EXPECT_TRUE(fs::exists(dir / "out" / "failures.json"));
}

TEST(Preprocess, Deterministic) {
    fixture::TempDir dir("pre_det");
    const auto in = load_manifest(fixture::write_dataset(dir / "data", 3, 8, 100, 120));
    PipelineConfig a;
    a.jobs = 1;
    PipelineConfig b = a;
    b.jobs = 3;
    preprocess_batch(in, a, dir / "one");
    preprocess_batch(in, b, dir / "two");
    EXPECT_EQ(fixture::read_tree(dir / "one"), fixture::read_tree(dir / "two"));
}

TEST(Augment, PassThroughWhenNoVariants) {
    fixture::TempDir dir("aug_zero");
    const auto path = fixture::write_dataset(dir / "data", 3, 2, 80, 100);
    const auto in = load_manifest(path);
    auto cfg = small_config();
    cfg.natural.per_image = 0;
    const auto r = augment_batch(in, cfg, dir / "out");
    ASSERT_TRUE(r.ok());
    ASSERT_EQ(r.manifest.entries.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(r.manifest.entries[i].boxes, in.entries[i].boxes);
        const auto src = fixture::read_tree(dir / "data");
        const auto out = fixture::read_tree(dir / "out");
        EXPECT_EQ(out.at("images/" + in.entries[i].id + ".pgm"), src.at("images/" + in.entries[i].id + ".pgm"));
    }
}

TEST(Augment, VariantCountsAndTightBoxes) {
    fixture::TempDir dir("aug_two");
    const auto in = load_manifest(fixture::write_dataset(dir / "data", 10, 4, 90, 110));
    auto cfg = small_config();
    cfg.natural.per_image = 1;
    cfg.classic_per_image = 1;
    const auto r = augment_batch(in, cfg, dir / "out");
    ASSERT_TRUE(r.ok()) << r.failures[0].error;
    EXPECT_EQ(r.manifest.entries.size(), 30u);
    std::set<std::string> ids;
    for (const auto& e : r.manifest.entries) {
        ids.insert(e.id);
        ASSERT_EQ(e.masks.size(), e.boxes.size()) << e.id;
        for (std::size_t k = 0; k < e.boxes.size(); ++k) {
            EXPECT_EQ(e.boxes[k], *oracle::tight_box(io::read_mask(e.masks[k]))) << e.id;
        }
    }
    EXPECT_TRUE(ids.count("case0__nat0"));
    EXPECT_TRUE(ids.count("case9__cls0"));
    const auto reloaded = load_manifest(dir / "out" / "manifest.json");
    EXPECT_EQ(reloaded.entries.size(), 30u);
    const auto audit = read_json_file(dir / "out" / "audit.json");
    EXPECT_EQ(audit.at("entries").size(), 10u);
    EXPECT_EQ(audit.at("entries")[0].at("variants").size(), 2u);
}

TEST(Augment, NaturalVariantLeavesFarPixelsAlone) {
    fixture::TempDir dir("aug_local");
    const auto in = load_manifest(fixture::write_dataset(dir / "data", 2, 6, 120, 140));
    auto cfg = small_config();
    cfg.natural.non_mass.count = 0;
    const auto r = augment_batch(in, cfg, dir / "out");
    ASSERT_TRUE(r.ok());
    for (const auto& e : r.manifest.entries) {
        if (e.id.find("__nat") == std::string::npos) continue;
        const auto& src = in.entries[e.id == "case0__nat0" ? 0 : 1];
        const auto a = io::read_gray(src.image);
        const auto b = io::read_gray(e.image);
        BinaryMask near(a.width(), a.height());
        for (std::size_t k = 0; k < src.masks.size(); ++k) {
            near = near | io::read_mask(src.masks[k]) | io::read_mask(e.masks[k]);
        }
        near = oracle::dilate(near, cfg.natural.inpaint_radius);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!near[i]) {
                ASSERT_EQ(a[i], b[i]) << e.id;
            }
        }
    }
}

TEST(Augment, BoxesWithoutMasksSkipNaturalWithWarning) {
    fixture::TempDir dir("aug_nomask");
    auto in = load_manifest(fixture::write_dataset(dir / "data", 1, 7, 80, 100));
    in.entries[0].masks.clear();
    auto cfg = small_config();
    cfg.classic_per_image = 1;
    const auto r = augment_batch(in, cfg, dir / "out");
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(r.warnings.size(), 1u);
    ASSERT_EQ(r.manifest.entries.size(), 2u);
    EXPECT_EQ(r.manifest.entries[1].id, "case0__cls0");
    EXPECT_EQ(r.manifest.entries[1].boxes.size(), in.entries[0].boxes.size());
    EXPECT_TRUE(r.manifest.entries[1].masks.empty());
}

TEST(Augment, DeterministicAcrossJobCounts) {
    fixture::TempDir dir("aug_det");
    const auto in = load_manifest(fixture::write_dataset(dir / "data", 4, 9, 90, 110));
    auto a = small_config();
    a.classic_per_image = 1;
    auto b = a;
    b.jobs = 4;
    augment_batch(in, a, dir / "one");
    augment_batch(in, b, dir / "two");
    EXPECT_EQ(fixture::read_tree(dir / "one"), fixture::read_tree(dir / "two"));
}

TEST(Folds, BreastGroupsStayTogether) {
    Manifest m;
    for (int i = 0; i < 40; ++i) {
        ManifestEntry e;
        e.id = "e" + std::to_string(i);
        e.image = "/x/" + e.id + ".png";
        e.breast_id = "b" + std::to_string(i / 2);
        if (i % 5 != 0) e.boxes.push_back({0, 0, 4, 4});
        m.entries.push_back(e);
    }
    const auto a = assign_folds(m, 5, 3, false);
    std::map<std::string, std::set<int>> by_breast;
    std::vector<int> sizes(5, 0);
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        by_breast[a.entries[i].breast_id].insert(a.fold[i]);
        ++sizes[a.fold[i]];
    }
    for (const auto& [b, f] : by_breast) EXPECT_EQ(f.size(), 1u) << b;
    for (int s : sizes) EXPECT_EQ(s, 8);

    const auto folds = split_folds(m, 5, 3, true);
    ASSERT_EQ(folds.size(), 5u);
    std::size_t tests = 0;
    for (const auto& f : folds) {
        EXPECT_EQ(f.entries.size(), 32u);
        for (const auto& e : f.entries) {
            EXPECT_FALSE(e.boxes.empty());
            tests += e.split == "test";
        }
    }
    EXPECT_EQ(tests, 32u);
    EXPECT_THROW(assign_folds(m, 1, 0, false), ParameterError);
}

TEST(Convert, Inbreast) {
    fixture::TempDir dir("inbreast");
    const auto m = fixture::mammogram(60, 80, 1);
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "annotations");
    io::write_pgm(dir / "images" / "p1_L_CC.pgm", m.image);
    io::write_pgm(dir / "images" / "p2_R_MLO.pgm", m.image);
    io::write_mask(dir / "annotations" / "p1_mask0.png", m.masks[0]);
    const auto& b = m.boxes[0];
    write_text(dir / "annotations" / "p1_L_CC.json",
               json{{"boxes", {{b.x_min, b.y_min, b.x_max, b.y_max}}}, {"masks", {"p1_mask0.png"}}, {"breast_id", "p1_L"}}
                   .dump());
    const auto man = convert_inbreast(dir.path());
    ASSERT_EQ(man.entries.size(), 2u);
    EXPECT_EQ(man.entries[0].id, "p1_L_CC");
    EXPECT_EQ(man.entries[0].boxes, m.boxes);
    EXPECT_EQ(man.entries[0].breast_id, "p1_L");
    EXPECT_TRUE(man.entries[1].boxes.empty());
    EXPECT_THROW(convert_inbreast(dir / "nowhere"), IoError);
}

TEST(Convert, Ddsm) {
    fixture::TempDir dir("ddsm");
    const auto m = fixture::mammogram(60, 80, 2, 2);
    fs::create_directories(dir / "case01");
    fs::create_directories(dir / "case02");
    io::write_pgm(dir / "case01" / "LEFT_CC.pgm", m.image);
    io::write_mask(dir / "case01" / "LEFT_CC_mask1.png", m.masks[0]);
    io::write_mask(dir / "case01" / "LEFT_CC_mask2.png", m.masks[1]);
    io::write_pgm(dir / "case01" / "LEFT_MLO.pgm", m.image);
    io::write_pgm(dir / "case02" / "scan.pgm", m.image);
    const auto man = convert_ddsm(dir.path());
    ASSERT_EQ(man.entries.size(), 3u);
    EXPECT_EQ(man.entries[0].id, "case01_LEFT_CC");
    EXPECT_EQ(man.entries[0].boxes, m.boxes);
    EXPECT_EQ(man.entries[0].breast_id, "case01_LEFT");
    EXPECT_EQ(man.entries[1].breast_id, "case01_LEFT");
    EXPECT_EQ(man.entries[2].breast_id, "case02_scan");
}
