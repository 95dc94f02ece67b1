#pragma once

#include <optional>
#include <vector>

#include "mammo/core/bbox.hpp"
#include "mammo/core/raster.hpp"
#include "mammo/error.hpp"

namespace mammo {

/// An image (one or more same-shape planes) with its lesion masks and the
/// tight boxes of those masks.
struct AugmentSample {
    std::vector<FloatImage> channels;
    std::vector<BinaryMask> lesion_masks;
    std::vector<BBox> boxes;

    int width() const { return channels.empty() ? 0 : channels.front().width(); }
    int height() const { return channels.empty() ? 0 : channels.front().height(); }

    /// Builds a sample and derives boxes from the masks.
    static AugmentSample make(std::vector<FloatImage> channels, std::vector<BinaryMask> masks) {
        AugmentSample s{std::move(channels), std::move(masks), {}};
        s.validate_shapes();
        s.refresh_boxes();
        return s;
    }

    void validate_shapes() const {
        if (channels.empty()) throw ParameterError("sample needs at least one channel");
        for (const auto& c : channels) require_same_shape(channels.front(), c, "sample channel");
        for (const auto& m : lesion_masks) require_same_shape(channels.front(), m, "lesion mask");
    }

    /// Recomputes boxes from masks; lesions whose mask became empty are dropped.
    void refresh_boxes() {
        std::vector<BinaryMask> kept;
        boxes.clear();
        for (auto& m : lesion_masks) {
            if (auto b = tight_bbox(m)) {
                boxes.push_back(*b);
                kept.push_back(std::move(m));
            }
        }
        lesion_masks = std::move(kept);
    }
};

}  // namespace mammo
