#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mammo/core/bbox.hpp"
#include "mammo/error.hpp"

namespace mammo::eval {

struct Prediction {
    std::string image_id;
    BBox box;
    double conf = 0.0;
};

struct GroundTruth {
    std::string image_id;
    BBox box;
};

struct EvalThresholds {
    double conf_th = 0.5;
    double iou_th = 0.5;

    void validate() const {
        if (!(conf_th >= 0.0 && conf_th <= 1.0)) throw ParameterError("conf threshold must lie in [0,1]");
        if (!(iou_th >= 0.0 && iou_th <= 1.0)) throw ParameterError("IOU threshold must lie in [0,1]");
    }
};

/// Counts for one evaluation. `tn` counts sub-threshold boxes that overlap
/// no ground truth at IOU >= iou_th; it enters neither TPR nor FPPI.
struct EvalReport {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;
    std::int64_t n_images = 0;
    double tpr = 0.0;   // tp / (tp + fn), 0 when there is no ground truth
    double fppi = 0.0;  // fp / n_images
};

/// Conf descending; ties by (image_id, box) so file order never matters.
inline bool ranks_before(const Prediction& a, const Prediction& b) {
    if (a.conf != b.conf) return a.conf > b.conf;
    return std::tie(a.image_id, a.box) < std::tie(b.image_id, b.box);
}

struct ImageCounts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Greedy one-to-one matching within one image. Predictions with conf below
/// the threshold are discarded; the rest, best first, take the unmatched GT
/// of highest IOU (earliest in `gts` on ties). IOU >= iou_th is a TP, anything
/// else an FP. GTs left unmatched are FNs.
inline ImageCounts match_image(std::vector<Prediction> preds, const std::vector<BBox>& gts,
                               const EvalThresholds& th) {
    ImageCounts c;
    std::vector<Prediction> kept;
    for (auto& p : preds) {
        if (p.conf >= th.conf_th) {
            kept.push_back(std::move(p));
            continue;
        }
        const bool overlaps = std::any_of(gts.begin(), gts.end(),
                                          [&](const BBox& g) { return iou(p.box, g) >= th.iou_th; });
        if (!overlaps) ++c.tn;
    }
    std::sort(kept.begin(), kept.end(), ranks_before);
    std::vector<bool> taken(gts.size(), false);
    for (const auto& p : kept) {
        double best = -1.0;
        std::size_t best_k = gts.size();
        for (std::size_t k = 0; k < gts.size(); ++k) {
            if (taken[k]) continue;
            const double v = iou(p.box, gts[k]);
            if (v > best) {
                best = v;
                best_k = k;
            }
        }
        if (best_k < gts.size() && best >= th.iou_th) {
            taken[best_k] = true;
            ++c.tp;
        } else {
            ++c.fp;
        }
    }
    c.fn = static_cast<std::int64_t>(std::count(taken.begin(), taken.end(), false));
    return c;
}

inline EvalReport finalize(const ImageCounts& total, std::int64_t n_images) {
    EvalReport r;
    r.tp = total.tp;
    r.fp = total.fp;
    r.fn = total.fn;
    r.tn = total.tn;
    r.n_images = n_images;
    r.tpr = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
    r.fppi = static_cast<double>(r.fp) / static_cast<double>(n_images);
    return r;
}

/// Predictions and ground truth grouped by image id.
struct GroupedDetections {
    std::map<std::string, std::vector<Prediction>> preds;
    std::map<std::string, std::vector<BBox>> gts;
    std::set<std::string> image_ids;
};

inline GroupedDetections group_by_image(const std::vector<Prediction>& preds,
                                        const std::vector<GroundTruth>& gts) {
    GroupedDetections g;
    for (const auto& p : preds) {
        g.preds[p.image_id].push_back(p);
        g.image_ids.insert(p.image_id);
    }
    for (const auto& t : gts) {
        g.gts[t.image_id].push_back(t.box);
        g.image_ids.insert(t.image_id);
    }
    for (auto& [id, boxes] : g.gts) std::sort(boxes.begin(), boxes.end());
    return g;
}

inline void check_image_count(const GroupedDetections& g, std::int64_t n_images) {
    if (n_images < 1) throw ParameterError("n_images must be at least 1");
    if (static_cast<std::int64_t>(g.image_ids.size()) > n_images) {
        throw ParameterError("detections reference " + std::to_string(g.image_ids.size()) +
                             " distinct images but n_images is " + std::to_string(n_images));
    }
}

inline EvalReport match_and_count(const GroupedDetections& g, const EvalThresholds& th,
                                  std::int64_t n_images) {
    th.validate();
    check_image_count(g, n_images);
    static const std::vector<Prediction> no_preds;
    static const std::vector<BBox> no_gts;
    ImageCounts total;
    for (const auto& id : g.image_ids) {
        const auto pi = g.preds.find(id);
        const auto gi = g.gts.find(id);
        const auto c = match_image(pi == g.preds.end() ? no_preds : pi->second,
                                   gi == g.gts.end() ? no_gts : gi->second, th);
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn += c.fn;
        total.tn += c.tn;
    }
    return finalize(total, n_images);
}

/// Scores predictions against ground truth over `n_images` images (images
/// without any GT still count toward FPPI).
inline EvalReport match_and_count(const std::vector<Prediction>& preds, const std::vector<GroundTruth>& gts,
                                  const EvalThresholds& th, std::int64_t n_images) {
    return match_and_count(group_by_image(preds, gts), th, n_images);
}

}  // namespace mammo::eval
