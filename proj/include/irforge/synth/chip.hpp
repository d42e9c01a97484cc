#pragma once

#include <string>
#include <vector>

#include "irforge/image.hpp"
#include "irforge/synth/gaussian.hpp"

namespace irforge::synth {

inline constexpr int kChipDimCap = 5;      // pasted chips stay within 5x5
inline constexpr int kLibraryDimCap = 32;  // sanity bound on stored chips

// Small real-valued intensity patch cut from the target library.
struct TargetChip {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // row-major

    TargetChip() = default;
    TargetChip(int w, int h, double fill = 0.0) : width(w), height(h) {
        if (w < 1 || h < 1) throw ParamError("chip dims must be >= 1");
        values.assign(static_cast<size_t>(w) * h, fill);
    }

    double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
};

TargetChip chip_from_image(const GrayImage& img);

// Bilinear resample to (new_w, new_h); both dims must lie in [1, 5].
TargetChip resize_chip(const TargetChip& chip, int new_w, int new_h);

// Additive Gaussian-weighted blend: window + chip * lambda * G, element
// by element. The background keeps weight 1. No clipping here; results
// are quantized only when an 8-bit image is materialized.
std::vector<double> paste_target(const std::vector<double>& window, const TargetChip& chip,
                                 const GaussianParams& p);

// Directory of grayscale PNG chips listed by library.json.
class ChipLibrary {
public:
    static ChipLibrary load(const std::string& dir);
    static void write(const std::string& dir, const std::vector<GrayImage>& chips,
                      const std::vector<std::string>& names);

    size_t size() const { return chips_.size(); }
    const TargetChip& chip(size_t i) const { return chips_[i]; }
    const std::string& name(size_t i) const { return names_[i]; }

    void add(TargetChip chip, std::string name);

private:
    std::vector<TargetChip> chips_;
    std::vector<std::string> names_;
};

}  // namespace irforge::synth
