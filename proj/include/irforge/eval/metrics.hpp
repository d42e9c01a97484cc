#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "irforge/box.hpp"

namespace irforge::eval {

struct DetectionRecord {
    std::string image_id;
    BBox box;
    double score = 0.0;
};

enum class Interpolation { kElevenPoint, kAllPoint };

Interpolation interpolation_from_string(const std::string& s);
std::string to_string(Interpolation i);

// Intersection over union of half-open boxes, in [0, 1].
double iou(const BBox& a, const BBox& b);

// Greedy matching for one image: predictions taken in descending score
// order (ties keep input order); each matches the unmatched ground
// truth of highest IoU when that IoU reaches the threshold. Returns
// true (TP) / false (FP) per prediction, aligned with the input order.
std::vector<bool> match_detections(const std::vector<DetectionRecord>& preds,
                                   const std::vector<BBox>& gts, double iou_thr);

using GroundTruth = std::map<std::string, std::vector<BBox>>;

// Dataset-level average precision from the accumulated PR curve. Single
// class, so this is also the mAP. Throws ParamError when the ground
// truth is empty rather than reporting a silent 0.
double average_precision(const std::vector<DetectionRecord>& preds, const GroundTruth& gts,
                         double iou_thr, Interpolation interp);

// TP / (TP + FN) over the dataset using every prediction (no score cut).
double recall_at(const std::vector<DetectionRecord>& preds, const GroundTruth& gts,
                 double iou_thr);

struct MatchCounts {
    int64_t tp = 0;
    int64_t fp = 0;
    int64_t fn = 0;
};

struct EvalReport {
    // Headline values: IoU 0.5 scored with 11-point interpolation,
    // IoU 0.75 with the all-point envelope.
    double ap_05 = 0.0;
    double ap_075 = 0.0;
    double recall_05 = 0.0;
    double recall_075 = 0.0;
    // Both interpolations at both thresholds for cross-checking.
    double ap_05_elevenpoint = 0.0, ap_05_allpoint = 0.0;
    double ap_075_elevenpoint = 0.0, ap_075_allpoint = 0.0;
    std::map<std::string, MatchCounts> per_image_05;
    std::map<std::string, MatchCounts> per_image_075;

    std::string to_json() const;
    std::string to_csv() const;
};

EvalReport evaluate_detections(const std::vector<DetectionRecord>& preds, const GroundTruth& gts);

// Predictions file: JSON array of {"image_id", "bbox": [4 ints], "score"}.
std::vector<DetectionRecord> load_predictions(const std::string& path);

// Ground truth from a generated dataset tree (manifest + per-image
// boxes.txt).
GroundTruth load_ground_truth(const std::string& dataset_dir);

}  // namespace irforge::eval
