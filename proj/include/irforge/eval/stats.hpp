#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "irforge/image.hpp"

namespace irforge::eval {

inline constexpr double kContrastBinWidth = 0.25;
inline constexpr int kContrastBins = 20;   // covers [0, 5), then overflow
inline constexpr int kBrightnessBins = 32; // 8 intensity levels per bin

// Peak intensity inside the box over the mean of the surrounding ring
// of width 2 (clipped at image edges). Neighboring targets are not
// excluded from the ring. An all-zero ring yields +infinity.
double local_contrast(const GrayImage& img, const BBox& box);

struct DatasetStats {
    std::map<std::pair<int, int>, int64_t> size_histogram;  // (w, h) -> count
    std::vector<int64_t> contrast_histogram;  // kContrastBins + 1 overflow slot
    std::vector<int64_t> brightness_histogram;
    int64_t total_targets = 0;
    double mean_target_area = 0.0;  // mask pixels per target
    double mean_bbox_side = 0.0;
    double fraction_contrast_below_2 = 0.0;
    double brightest_point_fraction = 0.0;

    std::string to_json() const;
    std::string to_csv() const;
};

// Walks a generated dataset tree (manifest.json + images + annotations).
DatasetStats dataset_stats(const std::string& dataset_dir);

}  // namespace irforge::eval
