#pragma once

// PipelineConfig and its JSON form. Every section and key is optional;
// absent keys keep their defaults, unknown keys are rejected.
//
//   {
//     "seed": 0,
//     "jobs": 1,
//     "segmentation": {"sigma": 2.0},
//     "truncation":   {"low": 0.05, "high": 0.01},
//     "clahe":        {"tiles_x": 8, "tiles_y": 8, "bins": 256},
//     "resize":       true,
//     "elastic":      {"alpha": 34.0, "sigma": 8.0},
//     "natural":      {"per_image": 1, "non_mass_regions": 2, "min_radius": 16,
//                      "max_radius": 64, "inpaint_radius": 3},
//     "classic":      {"per_image": 0, "max_rotation_deg": 0.1, "max_translation": 0.1,
//                      "max_shear_deg": 0.1, "min_scale": 0.9, "max_scale": 1.1,
//                      "flip_probability": 0.5},
//     "evaluation":   {"conf_th": 0.5, "iou_th": 0.5},
//     "scheduler":    {"swap_count": 3, "ratio": 0.8, "initial_lr": 0.01,
//                      "final_lr_fraction": 0.1, "final_epochs": 10,
//                      "max_epochs": 500, "hard_threshold": 0.5}
//   }

#include <cstdint>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "mammo/augmentation/classic.hpp"
#include "mammo/augmentation/elastic.hpp"
#include "mammo/augmentation/natural_deform.hpp"
#include "mammo/enhancement.hpp"
#include "mammo/error.hpp"
#include "mammo/evaluation/matching.hpp"
#include "mammo/normalization.hpp"
#include "mammo/scheduler/scheduler.hpp"

namespace mammo::pipeline {

struct NaturalAugmentConfig {
    int per_image = 1;
    NonMassRegionConfig non_mass;
    int inpaint_radius = kDefaultInpaintRadius;
};

struct PipelineConfig {
    std::uint64_t seed = 0;
    int jobs = 1;
    double segmentation_sigma = kDefaultSegmentationSigma;
    TruncationParams truncation;
    ClaheConfig clahe;  // clip_limit unused: the two channel clips are fixed
    bool resize = true;
    ElasticParams elastic;
    NaturalAugmentConfig natural;
    int classic_per_image = 0;
    ClassicAugmentRanges classic;
    eval::EvalThresholds evaluation;
    sched::SchedulerConfig scheduler;
    double hard_threshold = 0.5;

    void validate() const {
        if (jobs < 1) throw ParameterError("jobs must be >= 1");
        if (!(segmentation_sigma > 0.0)) throw ParameterError("segmentation sigma must be > 0");
        truncation.validate();
        if (clahe.tiles_x < 1 || clahe.tiles_y < 1 || clahe.bins < 2) {
            throw ParameterError("clahe tiles must be >= 1 and bins >= 2");
        }
        elastic.validate();
        if (natural.per_image < 0) throw ParameterError("natural per_image must be >= 0");
        if (natural.non_mass.count < 0) throw ParameterError("non_mass_regions must be >= 0");
        if (natural.non_mass.min_radius < 1 || natural.non_mass.max_radius < natural.non_mass.min_radius) {
            throw ParameterError("non-mass radius range is invalid");
        }
        if (natural.inpaint_radius < 1) throw ParameterError("inpaint radius must be >= 1");
        if (classic_per_image < 0) throw ParameterError("classic per_image must be >= 0");
        if (!(classic.min_scale > 0.0 && classic.min_scale <= classic.max_scale)) {
            throw ParameterError("classic scale range is invalid");
        }
        if (!(classic.flip_probability >= 0.0 && classic.flip_probability <= 1.0)) {
            throw ParameterError("flip_probability must lie in [0,1]");
        }
        evaluation.validate();
        scheduler.validate();
    }
};

namespace detail {

class Section {
public:
    Section(const nlohmann::json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ParameterError("config: \"" + name_ + "\" must be an object");
    }

    template <class T>
    Section& get(const char* key, T& field) {
        seen_.insert(key);
        if (!j_.contains(key)) return *this;
        try {
            const auto& v = j_.at(key);
            if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) throw ParameterError("expected a boolean");
            } else if constexpr (std::is_integral_v<T>) {
                if (!v.is_number_integer()) throw ParameterError("expected an integer");
            } else {
                if (!v.is_number()) throw ParameterError("expected a number");
            }
            field = v.get<T>();
        } catch (const std::exception& e) {
            throw ParameterError("config: " + name_ + "." + key + ": " + e.what());
        }
        return *this;
    }

    /// Sub-object, or nullptr when absent.
    const nlohmann::json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw ParameterError("config: unknown key " + name_ + "." + k);
        }
    }

private:
    const nlohmann::json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

}  // namespace detail

/// Overlays `j` onto `cfg`.
inline void apply_json(PipelineConfig& cfg, const nlohmann::json& j) {
    detail::Section top(j, "<root>");
    top.get("seed", cfg.seed).get("jobs", cfg.jobs).get("resize", cfg.resize);
    if (const auto* s = top.child("segmentation")) {
        detail::Section(*s, "segmentation").get("sigma", cfg.segmentation_sigma).finish();
    }
    if (const auto* s = top.child("truncation")) {
        detail::Section(*s, "truncation")
            .get("low", cfg.truncation.low_fraction)
            .get("high", cfg.truncation.high_fraction)
            .finish();
    }
    if (const auto* s = top.child("clahe")) {
        detail::Section(*s, "clahe")
            .get("tiles_x", cfg.clahe.tiles_x)
            .get("tiles_y", cfg.clahe.tiles_y)
            .get("bins", cfg.clahe.bins)
            .finish();
    }
    if (const auto* s = top.child("elastic")) {
        detail::Section(*s, "elastic").get("alpha", cfg.elastic.alpha).get("sigma", cfg.elastic.sigma).finish();
    }
    if (const auto* s = top.child("natural")) {
        detail::Section(*s, "natural")
            .get("per_image", cfg.natural.per_image)
            .get("non_mass_regions", cfg.natural.non_mass.count)
            .get("min_radius", cfg.natural.non_mass.min_radius)
            .get("max_radius", cfg.natural.non_mass.max_radius)
            .get("inpaint_radius", cfg.natural.inpaint_radius)
            .finish();
    }
    if (const auto* s = top.child("classic")) {
        detail::Section(*s, "classic")
            .get("per_image", cfg.classic_per_image)
            .get("max_rotation_deg", cfg.classic.max_rotation_deg)
            .get("max_translation", cfg.classic.max_translation)
            .get("max_shear_deg", cfg.classic.max_shear_deg)
            .get("min_scale", cfg.classic.min_scale)
            .get("max_scale", cfg.classic.max_scale)
            .get("flip_probability", cfg.classic.flip_probability)
            .finish();
    }
    if (const auto* s = top.child("evaluation")) {
        detail::Section(*s, "evaluation")
            .get("conf_th", cfg.evaluation.conf_th)
            .get("iou_th", cfg.evaluation.iou_th)
            .finish();
    }
    if (const auto* s = top.child("scheduler")) {
        detail::Section(*s, "scheduler")
            .get("swap_count", cfg.scheduler.swap_count)
            .get("ratio", cfg.scheduler.initial_split_ratio)
            .get("initial_lr", cfg.scheduler.initial_lr)
            .get("final_lr_fraction", cfg.scheduler.final_lr_fraction)
            .get("final_epochs", cfg.scheduler.final_epochs)
            .get("max_epochs", cfg.scheduler.max_epochs)
            .get("hard_threshold", cfg.hard_threshold)
            .finish();
    }
    top.finish();
    cfg.scheduler.seed = cfg.seed;
    cfg.elastic.seed = cfg.seed;
}

/// Full config as JSON (same schema as `apply_json`).
inline nlohmann::json to_json(const PipelineConfig& c) {
    return {
        {"seed", c.seed},
        {"jobs", c.jobs},
        {"resize", c.resize},
        {"segmentation", {{"sigma", c.segmentation_sigma}}},
        {"truncation", {{"low", c.truncation.low_fraction}, {"high", c.truncation.high_fraction}}},
        {"clahe", {{"tiles_x", c.clahe.tiles_x}, {"tiles_y", c.clahe.tiles_y}, {"bins", c.clahe.bins}}},
        {"elastic", {{"alpha", c.elastic.alpha}, {"sigma", c.elastic.sigma}}},
        {"natural",
         {{"per_image", c.natural.per_image},
          {"non_mass_regions", c.natural.non_mass.count},
          {"min_radius", c.natural.non_mass.min_radius},
          {"max_radius", c.natural.non_mass.max_radius},
          {"inpaint_radius", c.natural.inpaint_radius}}},
        {"classic",
         {{"per_image", c.classic_per_image},
          {"max_rotation_deg", c.classic.max_rotation_deg},
          {"max_translation", c.classic.max_translation},
          {"max_shear_deg", c.classic.max_shear_deg},
          {"min_scale", c.classic.min_scale},
          {"max_scale", c.classic.max_scale},
          {"flip_probability", c.classic.flip_probability}}},
        {"evaluation", {{"conf_th", c.evaluation.conf_th}, {"iou_th", c.evaluation.iou_th}}},
        {"scheduler",
         {{"swap_count", c.scheduler.swap_count},
          {"ratio", c.scheduler.initial_split_ratio},
          {"initial_lr", c.scheduler.initial_lr},
          {"final_lr_fraction", c.scheduler.final_lr_fraction},
          {"final_epochs", c.scheduler.final_epochs},
          {"max_epochs", c.scheduler.max_epochs},
          {"hard_threshold", c.hard_threshold}}},
    };
}

}  // namespace mammo::pipeline
