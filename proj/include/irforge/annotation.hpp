#pragma once

#include <utility>
#include <vector>

#include "irforge/box.hpp"
#include "irforge/image.hpp"

namespace irforge {

struct PointF {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const PointF& o) const = default;
};

// Per-image ground truth. points[i] is the continuous intensity peak of
// boxes[i]; mask flags the pixels a target visibly brightened.
struct Annotation {
    std::vector<BBox> boxes;
    std::vector<PointF> points;
    SkyMask mask;  // binary target mask, same dims as the image

    bool operator==(const Annotation& o) const = default;
};

}  // namespace irforge
