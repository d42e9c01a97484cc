#pragma once

#include <algorithm>
#include <cstdint>
#include <string>

#include "irforge/errors.hpp"

namespace irforge {

// Half-open integer rectangle: [x_min, x_max) x [y_min, y_max).
struct BBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;

    BBox() = default;
    BBox(int x0, int y0, int x1, int y1) : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
        if (x_min < 0 || y_min < 0 || x_min >= x_max || y_min >= y_max)
            throw ParamError("invalid box (" + std::to_string(x0) + "," + std::to_string(y0) +
                             "," + std::to_string(x1) + "," + std::to_string(y1) + ")");
    }

    int width() const { return x_max - x_min; }
    int height() const { return y_max - y_min; }
    int64_t area() const { return static_cast<int64_t>(width()) * height(); }

    bool contains(int x, int y) const {
        return x >= x_min && x < x_max && y >= y_min && y < y_max;
    }

    bool operator==(const BBox& o) const = default;
};

inline int64_t intersection_area(const BBox& a, const BBox& b) {
    int64_t w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    int64_t h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (w <= 0 || h <= 0) return 0;
    return w * h;
}

// Chebyshev distance between box borders. Positive values are the width
// of the empty band between the boxes; 0 means touching or overlapping
// on that axis; the result is negative only when the boxes intersect.
inline int border_gap(const BBox& a, const BBox& b) {
    int sx = std::max(a.x_min, b.x_min) - std::min(a.x_max, b.x_max);
    int sy = std::max(a.y_min, b.y_min) - std::min(a.y_max, b.y_max);
    return std::max(sx, sy);
}

}  // namespace irforge
