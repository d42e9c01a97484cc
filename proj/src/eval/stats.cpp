#include "irforge/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "irforge/annotation_io.hpp"
#include "irforge/compose/dataset.hpp"
#include "irforge/errors.hpp"
#include "irforge/png_io.hpp"

namespace irforge::eval {

namespace fs = std::filesystem;
using nlohmann::json;

double local_contrast(const GrayImage& img, const BBox& box) {
    require_inside(box, img.width, img.height, "local_contrast");

    int peak = 0;
    for (int y = box.y_min; y < box.y_max; ++y)
        for (int x = box.x_min; x < box.x_max; ++x) peak = std::max<int>(peak, img.at(x, y));

    int rx0 = std::max(0, box.x_min - 2), ry0 = std::max(0, box.y_min - 2);
    int rx1 = std::min(img.width, box.x_max + 2), ry1 = std::min(img.height, box.y_max + 2);
    int64_t ring_sum = 0, ring_count = 0;
    for (int y = ry0; y < ry1; ++y)
        for (int x = rx0; x < rx1; ++x) {
            if (box.contains(x, y)) continue;
            ring_sum += img.at(x, y);
            ++ring_count;
        }
    if (ring_count == 0) throw ParamError("local_contrast: box leaves no surrounding ring");
    if (ring_sum == 0) return std::numeric_limits<double>::infinity();
    double ring_mean = static_cast<double>(ring_sum) / static_cast<double>(ring_count);
    return static_cast<double>(peak) / ring_mean;
}

DatasetStats dataset_stats(const std::string& dataset_dir) {
    compose::Manifest manifest =
        compose::Manifest::from_json_file((fs::path(dataset_dir) / "manifest.json").string());

    DatasetStats stats;
    stats.contrast_histogram.assign(kContrastBins + 1, 0);
    stats.brightness_histogram.assign(kBrightnessBins, 0);

    int64_t mask_pixels = 0;
    int64_t side_sum = 0, side_count = 0;
    int64_t below_2 = 0, brightest = 0;

    for (const compose::ManifestEntry& entry : manifest.images) {
        fs::path img_path = fs::path(dataset_dir) / "images" / (entry.id + ".png");
        GrayImage img = read_gray_png(img_path.string());
        Annotation ann =
            read_annotation((fs::path(dataset_dir) / "annotations" / entry.id).string());
        if (static_cast<int>(ann.boxes.size()) != entry.targets)
            throw IoError("manifest target count disagrees with boxes.txt for " + entry.id);

        int global_max = 0;
        for (uint8_t v : img.pixels) global_max = std::max<int>(global_max, v);

        for (const BBox& box : ann.boxes) {
            ++stats.total_targets;
            ++stats.size_histogram[{box.width(), box.height()}];
            side_sum += box.width() + box.height();
            side_count += 2;

            int peak = 0;
            for (int y = box.y_min; y < box.y_max; ++y)
                for (int x = box.x_min; x < box.x_max; ++x) {
                    peak = std::max<int>(peak, img.at(x, y));
                    if (ann.mask.at(x, y)) ++mask_pixels;
                }
            if (peak == global_max) ++brightest;
            ++stats.brightness_histogram[peak / (256 / kBrightnessBins)];

            double contrast = local_contrast(img, box);
            if (!std::isfinite(contrast) || contrast >= kContrastBins * kContrastBinWidth) {
                ++stats.contrast_histogram[kContrastBins];
            } else {
                ++stats.contrast_histogram[static_cast<int>(contrast / kContrastBinWidth)];
            }
            if (std::isfinite(contrast) && contrast < 2.0) ++below_2;
        }
    }

    if (stats.total_targets > 0) {
        stats.mean_target_area = static_cast<double>(mask_pixels) / stats.total_targets;
        stats.mean_bbox_side = static_cast<double>(side_sum) / static_cast<double>(side_count);
        stats.fraction_contrast_below_2 = static_cast<double>(below_2) / stats.total_targets;
        stats.brightest_point_fraction = static_cast<double>(brightest) / stats.total_targets;
    }
    return stats;
}

std::string DatasetStats::to_json() const {
    json j;
    json sizes = json::array();
    for (const auto& [dims, count] : size_histogram)
        sizes.push_back({{"w", dims.first}, {"h", dims.second}, {"count", count}});
    j["size_histogram"] = sizes;
    j["contrast_histogram"] = {{"bin_width", kContrastBinWidth},
                               {"counts", contrast_histogram},
                               {"note", "last bin holds >= 5.0 and infinite values"}};
    j["brightness_histogram"] = {{"bin_width", 256 / kBrightnessBins},
                                 {"counts", brightness_histogram}};
    j["total_targets"] = total_targets;
    j["mean_target_area"] = mean_target_area;
    j["mean_bbox_side"] = mean_bbox_side;
    j["fraction_contrast_below_2"] = fraction_contrast_below_2;
    j["brightest_point_fraction"] = brightest_point_fraction;
    return j.dump(2) + "\n";
}

std::string DatasetStats::to_csv() const {
    std::ostringstream out;
    out << "metric,value\n";
    out << "total_targets," << total_targets << "\n";
    out << "mean_target_area," << mean_target_area << "\n";
    out << "mean_bbox_side," << mean_bbox_side << "\n";
    out << "fraction_contrast_below_2," << fraction_contrast_below_2 << "\n";
    out << "brightest_point_fraction," << brightest_point_fraction << "\n";
    return out.str();
}

}  // namespace irforge::eval
