#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "irforge/box.hpp"
#include "irforge/errors.hpp"

namespace irforge {

// Single-channel 8-bit raster, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, uint8_t fill = 0) : width(w), height(h) {
        if (w < 1 || h < 1) throw ParamError("image dims must be >= 1");
        pixels.assign(static_cast<size_t>(w) * h, fill);
    }

    uint8_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }

    bool operator==(const GrayImage& o) const = default;
};

// Per-pixel binary semantic annotation: 1 = sky, 0 = non-sky.
struct SkyMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bits;

    SkyMask() = default;
    SkyMask(int w, int h, uint8_t fill = 0) : width(w), height(h) {
        if (w < 1 || h < 1) throw ParamError("mask dims must be >= 1");
        bits.assign(static_cast<size_t>(w) * h, fill ? 1 : 0);
    }

    uint8_t& at(int x, int y) { return bits[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return bits[static_cast<size_t>(y) * width + x]; }

    bool operator==(const SkyMask& o) const = default;
};

// Blending runs in 64-bit real; this is the single quantization point
// back to 8-bit: round half away from zero, clip to [0, 255].
inline uint8_t quantize_intensity(double v) {
    double r = v < 0.0 ? std::ceil(v - 0.5) : std::floor(v + 0.5);
    if (r < 0.0) return 0;
    if (r > 255.0) return 255;
    return static_cast<uint8_t>(r);
}

inline void require_inside(const BBox& b, int width, int height, const char* what) {
    if (b.x_max > width || b.y_max > height)
        throw BoundsError(std::string(what) + ": box (" + std::to_string(b.x_min) + "," +
                          std::to_string(b.y_min) + "," + std::to_string(b.x_max) + "," +
                          std::to_string(b.y_max) + ") exceeds " + std::to_string(width) +
                          "x" + std::to_string(height));
}

inline GrayImage crop(const GrayImage& img, const BBox& b) {
    require_inside(b, img.width, img.height, "crop");
    GrayImage out(b.width(), b.height());
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(x, y) = img.at(b.x_min + x, b.y_min + y);
    return out;
}

}  // namespace irforge
