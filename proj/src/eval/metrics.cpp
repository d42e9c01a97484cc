#include "irforge/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "irforge/errors.hpp"

namespace irforge::eval {

namespace fs = std::filesystem;
using nlohmann::json;

Interpolation interpolation_from_string(const std::string& s) {
    if (s == "elevenpoint") return Interpolation::kElevenPoint;
    if (s == "allpoint") return Interpolation::kAllPoint;
    throw ParamError("unknown interpolation: " + s);
}

std::string to_string(Interpolation i) {
    return i == Interpolation::kElevenPoint ? "elevenpoint" : "allpoint";
}

double iou(const BBox& a, const BBox& b) {
    int64_t inter = intersection_area(a, b);
    if (inter == 0) return 0.0;
    int64_t uni = a.area() + b.area() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<bool> match_detections(const std::vector<DetectionRecord>& preds,
                                   const std::vector<BBox>& gts, double iou_thr) {
    std::vector<size_t> order(preds.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return preds[a].score > preds[b].score; });

    std::vector<bool> labels(preds.size(), false);
    std::vector<bool> taken(gts.size(), false);
    for (size_t oi : order) {
        double best = -1.0;
        int best_gt = -1;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) continue;
            double v = iou(preds[oi].box, gts[g]);
            if (v > best) {
                best = v;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0 && best >= iou_thr) {
            taken[best_gt] = true;
            labels[oi] = true;
        }
    }
    return labels;
}

namespace {

struct ScoredLabel {
    double score;
    size_t input_index;
    bool tp;
};

int64_t total_gt_count(const GroundTruth& gts) {
    int64_t n = 0;
    for (const auto& [id, boxes] : gts) n += static_cast<int64_t>(boxes.size());
    return n;
}

std::vector<ScoredLabel> label_all(const std::vector<DetectionRecord>& preds,
                                   const GroundTruth& gts, double iou_thr) {
    std::map<std::string, std::vector<size_t>> by_image;
    for (size_t i = 0; i < preds.size(); ++i) by_image[preds[i].image_id].push_back(i);

    std::vector<ScoredLabel> pooled;
    pooled.reserve(preds.size());
    for (const auto& [image_id, indices] : by_image) {
        std::vector<DetectionRecord> image_preds;
        image_preds.reserve(indices.size());
        for (size_t i : indices) image_preds.push_back(preds[i]);
        static const std::vector<BBox> kNoBoxes;
        auto it = gts.find(image_id);
        const std::vector<BBox>& boxes = it == gts.end() ? kNoBoxes : it->second;
        std::vector<bool> labels = match_detections(image_preds, boxes, iou_thr);
        for (size_t j = 0; j < indices.size(); ++j)
            pooled.push_back(ScoredLabel{image_preds[j].score, indices[j], labels[j]});
    }
    std::stable_sort(pooled.begin(), pooled.end(), [](const ScoredLabel& a, const ScoredLabel& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.input_index < b.input_index;
    });
    return pooled;
}

struct PrCurve {
    std::vector<double> precision;
    std::vector<double> recall;
};

PrCurve pr_curve(const std::vector<ScoredLabel>& pooled, int64_t n_gt) {
    PrCurve curve;
    int64_t tp = 0, fp = 0;
    for (const ScoredLabel& s : pooled) {
        s.tp ? ++tp : ++fp;
        curve.precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        curve.recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
    }
    return curve;
}

double ap_elevenpoint(const PrCurve& c) {
    double total = 0.0;
    for (int i = 0; i <= 10; ++i) {
        double r = i / 10.0;
        double best = 0.0;
        for (size_t j = 0; j < c.recall.size(); ++j)
            if (c.recall[j] >= r) best = std::max(best, c.precision[j]);
        total += best;
    }
    return total / 11.0;
}

double ap_allpoint(const PrCurve& c) {
    if (c.recall.empty()) return 0.0;
    // Monotone envelope from the right, then sum precision over recall
    // steps in increasing recall order.
    std::vector<double> env(c.precision);
    for (size_t j = env.size() - 1; j-- > 0;) env[j] = std::max(env[j], env[j + 1]);
    double ap = 0.0;
    double prev_recall = 0.0;
    for (size_t j = 0; j < env.size(); ++j) {
        if (c.recall[j] > prev_recall) {
            ap += (c.recall[j] - prev_recall) * env[j];
            prev_recall = c.recall[j];
        }
    }
    return ap;
}

}  // namespace

double average_precision(const std::vector<DetectionRecord>& preds, const GroundTruth& gts,
                         double iou_thr, Interpolation interp) {
    int64_t n_gt = total_gt_count(gts);
    if (n_gt == 0) throw ParamError("average_precision: no ground-truth boxes");
    if (preds.empty()) return 0.0;
    PrCurve curve = pr_curve(label_all(preds, gts, iou_thr), n_gt);
    return interp == Interpolation::kElevenPoint ? ap_elevenpoint(curve) : ap_allpoint(curve);
}

double recall_at(const std::vector<DetectionRecord>& preds, const GroundTruth& gts,
                 double iou_thr) {
    int64_t n_gt = total_gt_count(gts);
    if (n_gt == 0) throw ParamError("recall_at: no ground-truth boxes");
    int64_t tp = 0;
    for (const ScoredLabel& s : label_all(preds, gts, iou_thr))
        if (s.tp) ++tp;
    return static_cast<double>(tp) / static_cast<double>(n_gt);
}

EvalReport evaluate_detections(const std::vector<DetectionRecord>& preds,
                               const GroundTruth& gts) {
    EvalReport report;
    report.ap_05_elevenpoint = average_precision(preds, gts, 0.5, Interpolation::kElevenPoint);
    report.ap_05_allpoint = average_precision(preds, gts, 0.5, Interpolation::kAllPoint);
    report.ap_075_elevenpoint = average_precision(preds, gts, 0.75, Interpolation::kElevenPoint);
    report.ap_075_allpoint = average_precision(preds, gts, 0.75, Interpolation::kAllPoint);
    report.ap_05 = report.ap_05_elevenpoint;
    report.ap_075 = report.ap_075_allpoint;
    report.recall_05 = recall_at(preds, gts, 0.5);
    report.recall_075 = recall_at(preds, gts, 0.75);

    auto count_at = [&](double thr) {
        std::map<std::string, MatchCounts> counts;
        for (const auto& [id, boxes] : gts) counts[id].fn = static_cast<int64_t>(boxes.size());
        for (const ScoredLabel& s : label_all(preds, gts, thr)) {
            MatchCounts& c = counts[preds[s.input_index].image_id];
            if (s.tp) {
                ++c.tp;
                --c.fn;
            } else {
                ++c.fp;
            }
        }
        return counts;
    };
    report.per_image_05 = count_at(0.5);
    report.per_image_075 = count_at(0.75);
    return report;
}

std::string EvalReport::to_json() const {
    json j;
    j["ap_05"] = ap_05;
    j["ap_075"] = ap_075;
    j["recall_05"] = recall_05;
    j["recall_075"] = recall_075;
    j["interpolations"] = {
        {"iou_0.50", {{"elevenpoint", ap_05_elevenpoint}, {"allpoint", ap_05_allpoint}}},
        {"iou_0.75", {{"elevenpoint", ap_075_elevenpoint}, {"allpoint", ap_075_allpoint}}}};
    auto counts_json = [](const std::map<std::string, MatchCounts>& counts) {
        json out = json::object();
        for (const auto& [id, c] : counts)
            out[id] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
        return out;
    };
    j["per_image"] = {{"iou_0.50", counts_json(per_image_05)},
                      {"iou_0.75", counts_json(per_image_075)}};
    return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
    std::ostringstream out;
    out << "metric,value\n";
    out << "ap_05," << ap_05 << "\n";
    out << "ap_075," << ap_075 << "\n";
    out << "recall_05," << recall_05 << "\n";
    out << "recall_075," << recall_075 << "\n";
    out << "ap_05_elevenpoint," << ap_05_elevenpoint << "\n";
    out << "ap_05_allpoint," << ap_05_allpoint << "\n";
    out << "ap_075_elevenpoint," << ap_075_elevenpoint << "\n";
    out << "ap_075_allpoint," << ap_075_allpoint << "\n";
    auto totals = [&out](const char* tag, const std::map<std::string, MatchCounts>& counts) {
        MatchCounts sum;
        for (const auto& [id, c] : counts) {
            sum.tp += c.tp;
            sum.fp += c.fp;
            sum.fn += c.fn;
        }
        out << "tp_" << tag << "," << sum.tp << "\n";
        out << "fp_" << tag << "," << sum.fp << "\n";
        out << "fn_" << tag << "," << sum.fn << "\n";
    };
    totals("05", per_image_05);
    totals("075", per_image_075);
    return out.str();
}

std::vector<DetectionRecord> load_predictions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open predictions: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("malformed predictions " + path + ": " + e.what());
    }
    if (!j.is_array()) throw IoError("predictions must be a JSON array: " + path);

    std::vector<DetectionRecord> preds;
    preds.reserve(j.size());
    try {
        for (const auto& entry : j) {
            DetectionRecord rec;
            rec.image_id = entry.at("image_id").get<std::string>();
            const auto& bb = entry.at("bbox");
            if (!bb.is_array() || bb.size() != 4)
                throw ParamError("bbox must be [x_min, y_min, x_max, y_max]: " + path);
            rec.box = BBox(bb[0].get<int>(), bb[1].get<int>(), bb[2].get<int>(), bb[3].get<int>());
            rec.score = entry.at("score").get<double>();
            if (!std::isfinite(rec.score) || rec.score < 0.0 || rec.score > 1.0)
                throw ParamError("score must be finite in [0, 1]: " + path);
            preds.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw ParamError("bad prediction record in " + path + ": " + e.what());
    }
    return preds;
}

GroundTruth load_ground_truth(const std::string& dataset_dir) {
    fs::path ann_dir = fs::path(dataset_dir) / "annotations";
    if (!fs::is_directory(ann_dir)) throw IoError("missing annotations dir: " + ann_dir.string());

    GroundTruth gts;
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(ann_dir))
        if (entry.is_directory()) ids.push_back(entry.path().filename().string());
    std::sort(ids.begin(), ids.end());

    for (const std::string& id : ids) {
        fs::path boxes_path = ann_dir / id / "boxes.txt";
        std::ifstream in(boxes_path);
        if (!in) throw IoError("cannot open: " + boxes_path.string());
        std::vector<BBox> boxes;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            int x0, y0, x1, y1;
            if (!(ss >> x0 >> y0 >> x1 >> y1))
                throw IoError("malformed box line in " + boxes_path.string());
            boxes.emplace_back(x0, y0, x1, y1);
        }
        gts[id] = std::move(boxes);
    }
    if (gts.empty()) throw IoError("no annotation directories under " + ann_dir.string());
    return gts;
}

}  // namespace irforge::eval
