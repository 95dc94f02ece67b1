#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

#include "mammo/evaluation/matching.hpp"

namespace mammo::eval {

struct FrocPoint {
    double conf_th = 1.0;
    double fppi = 0.0;
    double tpr = 0.0;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
};

/// Operating points sorted by FPPI ascending (then TPR ascending, then
/// threshold descending).
struct FrocCurve {
    std::vector<FrocPoint> points;
};

/// Distinct prediction confidences plus 1.0.
inline std::vector<double> default_conf_grid(const std::vector<Prediction>& preds) {
    std::set<double> grid{1.0};
    for (const auto& p : preds) grid.insert(p.conf);
    return {grid.rbegin(), grid.rend()};
}

/// One match_and_count per threshold in `conf_grid` (default grid when absent).
inline FrocCurve froc(const std::vector<Prediction>& preds, const std::vector<GroundTruth>& gts,
                      double iou_th, std::int64_t n_images,
                      std::optional<std::vector<double>> conf_grid = std::nullopt) {
    auto grid = conf_grid ? *conf_grid : default_conf_grid(preds);
    if (grid.empty()) throw ParameterError("FROC confidence grid is empty");
    const auto grouped = group_by_image(preds, gts);
    FrocCurve curve;
    for (double th : grid) {
        const auto r = match_and_count(grouped, EvalThresholds{th, iou_th}, n_images);
        curve.points.push_back({th, r.fppi, r.tpr, r.tp, r.fp});
    }
    std::sort(curve.points.begin(), curve.points.end(), [](const FrocPoint& a, const FrocPoint& b) {
        if (a.fppi != b.fppi) return a.fppi < b.fppi;
        if (a.tpr != b.tpr) return a.tpr < b.tpr;
        return a.conf_th > b.conf_th;
    });
    return curve;
}

}  // namespace mammo::eval
