#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "irforge/annotation_io.hpp"
#include "irforge/compose/dataset.hpp"
#include "irforge/compose/demo_inputs.hpp"
#include "irforge/eval/metrics.hpp"
#include "irforge/eval/stats.hpp"
#include "irforge/png_io.hpp"
#include "irforge/rng.hpp"

#include "support/eval_oracle.hpp"

using namespace irforge;
using namespace irforge::eval;
using testsupport::brute_ap;
using testsupport::brute_match;
namespace fs = std::filesystem;

namespace {

// The fixture hand-computed in docs/ap_worked_example.md.
std::pair<std::vector<DetectionRecord>, GroundTruth> worked_fixture() {
    GroundTruth gts;
    gts["A"] = {BBox(0, 0, 10, 10), BBox(20, 0, 30, 10)};
    gts["B"] = {BBox(0, 0, 10, 10), BBox(20, 0, 30, 10)};
    std::vector<DetectionRecord> preds = {
        {"A", BBox(0, 0, 10, 10), 0.95},  {"A", BBox(21, 0, 31, 10), 0.85},
        {"B", BBox(2, 0, 12, 10), 0.80},  {"B", BBox(0, 0, 10, 10), 0.70},
        {"B", BBox(40, 0, 50, 10), 0.60}, {"A", BBox(20, 0, 30, 10), 0.50},
    };
    return {preds, gts};
}

}  // namespace

TEST_CASE("iou: identity, disjoint, overlap") {
    BBox a(0, 0, 2, 2);
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(a, BBox(5, 5, 7, 7)) == 0.0);
    CHECK(iou(a, BBox(1, 1, 3, 3)) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
}

TEST_CASE("match_detections: basic rules") {
    BBox gt(0, 0, 10, 10);

    SUBCASE("exact prediction is a TP") {
        auto labels = match_detections({{"i", gt, 0.9}}, {gt}, 0.5);
        CHECK(labels == std::vector<bool>{true});
    }
    SUBCASE("one ground truth matches at most once") {
        auto labels = match_detections({{"i", gt, 0.6}, {"i", gt, 0.9}}, {gt}, 0.5);
        CHECK(labels == std::vector<bool>{false, true});  // higher score wins
    }
    SUBCASE("below-threshold overlap is an FP and keeps the gt available") {
        std::vector<DetectionRecord> preds = {{"i", BBox(6, 0, 16, 10), 0.9}, {"i", gt, 0.5}};
        auto labels = match_detections(preds, {gt}, 0.5);
        CHECK(labels == std::vector<bool>{false, true});
    }
}

TEST_CASE("match_detections: agrees with the brute-force oracle on random cases") {
    SeededRng rng(400, 0);
    for (int trial = 0; trial < 500; ++trial) {
        int n_pred = static_cast<int>(rng.uniform_int(0, 5));
        int n_gt = static_cast<int>(rng.uniform_int(0, 3));
        std::vector<DetectionRecord> preds;
        std::vector<BBox> gts;
        for (int i = 0; i < n_pred; ++i) {
            int x = static_cast<int>(rng.uniform_int(0, 12));
            int y = static_cast<int>(rng.uniform_int(0, 12));
            int w = static_cast<int>(rng.uniform_int(2, 6));
            int h = static_cast<int>(rng.uniform_int(2, 6));
            preds.push_back({"i", BBox(x, y, x + w, y + h), rng.uniform()});
        }
        for (int i = 0; i < n_gt; ++i) {
            int x = static_cast<int>(rng.uniform_int(0, 12));
            int y = static_cast<int>(rng.uniform_int(0, 12));
            int w = static_cast<int>(rng.uniform_int(2, 6));
            int h = static_cast<int>(rng.uniform_int(2, 6));
            gts.emplace_back(x, y, x + w, y + h);
        }
        double thr = rng.uniform_real(0.25, 0.8);
        CHECK(match_detections(preds, gts, thr) == brute_match(preds, gts, thr));
    }
}

TEST_CASE("match_detections: invariant to input order among distinct scores") {
    SeededRng rng(401, 0);
    std::vector<DetectionRecord> preds;
    std::vector<BBox> gts = {BBox(0, 0, 5, 5), BBox(10, 0, 15, 5)};
    for (int i = 0; i < 5; ++i) {
        int x = static_cast<int>(rng.uniform_int(0, 12));
        preds.push_back({"i", BBox(x, 0, x + 5, 5), (i + 1) * 0.11});
    }
    auto base = match_detections(preds, gts, 0.3);
    std::vector<size_t> perm = {4, 2, 0, 3, 1};
    std::vector<DetectionRecord> shuffled;
    for (size_t i : perm) shuffled.push_back(preds[i]);
    auto shuffled_labels = match_detections(shuffled, gts, 0.3);
    for (size_t j = 0; j < perm.size(); ++j) CHECK(shuffled_labels[j] == base[perm[j]]);
}

TEST_CASE("average_precision: degenerate cases") {
    GroundTruth gts;
    gts["i"] = {BBox(0, 0, 4, 4)};

    std::vector<DetectionRecord> perfect = {{"i", BBox(0, 0, 4, 4), 1.0}};
    CHECK(average_precision(perfect, gts, 0.5, Interpolation::kElevenPoint) == 1.0);
    CHECK(average_precision(perfect, gts, 0.5, Interpolation::kAllPoint) == 1.0);
    CHECK(average_precision(perfect, gts, 0.75, Interpolation::kElevenPoint) == 1.0);

    CHECK(average_precision({}, gts, 0.5, Interpolation::kAllPoint) == 0.0);
    CHECK(recall_at({}, gts, 0.5) == 0.0);

    GroundTruth empty;
    CHECK_THROWS_AS(average_precision(perfect, empty, 0.5, Interpolation::kAllPoint), ParamError);
    CHECK_THROWS_AS(recall_at(perfect, empty, 0.5), ParamError);
}

TEST_CASE("average_precision: the worked 6-pred / 4-gt fixture") {
    auto [preds, gts] = worked_fixture();

    CHECK(average_precision(preds, gts, 0.50, Interpolation::kElevenPoint) ==
          doctest::Approx(8.0 / 11.0).epsilon(1e-15));
    CHECK(average_precision(preds, gts, 0.50, Interpolation::kAllPoint) ==
          doctest::Approx(0.75).epsilon(1e-15));
    CHECK(average_precision(preds, gts, 0.75, Interpolation::kElevenPoint) ==
          doctest::Approx(7.5 / 11.0).epsilon(1e-15));
    CHECK(average_precision(preds, gts, 0.75, Interpolation::kAllPoint) ==
          doctest::Approx(0.6875).epsilon(1e-15));
    CHECK(recall_at(preds, gts, 0.50) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(recall_at(preds, gts, 0.75) == doctest::Approx(0.75).epsilon(1e-15));

    EvalReport report = evaluate_detections(preds, gts);
    CHECK(report.ap_05 == doctest::Approx(8.0 / 11.0).epsilon(1e-15));
    CHECK(report.ap_075 == doctest::Approx(0.6875).epsilon(1e-15));
    CHECK(report.per_image_05.at("A").tp == 2);
    CHECK(report.per_image_05.at("B").tp == 1);
    CHECK(report.per_image_05.at("B").fp == 2);
    CHECK(report.per_image_05.at("B").fn == 1);
    CHECK(report.per_image_075.at("B").tp == 1);
    CHECK(report.to_json().find("ap_05") != std::string::npos);
    CHECK(report.to_csv().find("recall_075") != std::string::npos);
    CHECK(report.to_csv().find("tp_05,3") != std::string::npos);
    CHECK(report.to_csv().find("fn_075,1") != std::string::npos);
}

TEST_CASE("average_precision: exact agreement with the exhaustive reference") {
    SeededRng rng(402, 0);
    int nontrivial = 0;
    for (int trial = 0; trial < 300; ++trial) {
        GroundTruth gts;
        std::vector<DetectionRecord> preds;
        int n_gt = static_cast<int>(rng.uniform_int(1, 3));
        for (int i = 0; i < n_gt; ++i) {
            int x = static_cast<int>(rng.uniform_int(0, 10));
            int y = static_cast<int>(rng.uniform_int(0, 10));
            gts["img"].emplace_back(x, y, x + 4, y + 4);
        }
        int n_pred = static_cast<int>(rng.uniform_int(0, 5));
        for (int i = 0; i < n_pred; ++i) {
            int x = static_cast<int>(rng.uniform_int(0, 10));
            int y = static_cast<int>(rng.uniform_int(0, 10));
            preds.push_back({"img", BBox(x, y, x + 4, y + 4), rng.uniform()});
        }
        for (double thr : {0.5, 0.75}) {
            for (Interpolation interp : {Interpolation::kElevenPoint, Interpolation::kAllPoint}) {
                double got = average_precision(preds, gts, thr, interp);
                double want = brute_ap(preds, gts, thr, interp);
                CHECK(got == want);
                if (want > 0.0) ++nontrivial;
            }
        }
    }
    CHECK(nontrivial > 100);
}

TEST_CASE("average_precision: adding a TP-only prediction never lowers AP") {
    SeededRng rng(403, 0);
    GroundTruth gts;
    gts["img"] = {BBox(0, 0, 4, 4), BBox(10, 0, 14, 4), BBox(20, 0, 24, 4)};
    std::vector<DetectionRecord> preds = {{"img", BBox(0, 0, 4, 4), 0.9},
                                          {"img", BBox(30, 0, 34, 4), 0.8}};
    for (Interpolation interp : {Interpolation::kElevenPoint, Interpolation::kAllPoint}) {
        double before = average_precision(preds, gts, 0.5, interp);
        auto more = preds;
        more.push_back({"img", BBox(10, 0, 14, 4), 0.85});
        double after = average_precision(more, gts, 0.5, interp);
        CHECK(after >= before);
    }

    // a lowest-score FP leaves every existing recall point's precision
    // alone and can only drag AP down
    for (Interpolation interp : {Interpolation::kElevenPoint, Interpolation::kAllPoint}) {
        double before = average_precision(preds, gts, 0.5, interp);
        auto more = preds;
        more.push_back({"img", BBox(40, 0, 44, 4), 0.01});
        double after = average_precision(more, gts, 0.5, interp);
        CHECK(after <= before);
    }
}

TEST_CASE("local_contrast: ratios and edge cases") {
    GrayImage flat(12, 12, 50);
    BBox box(5, 5, 8, 8);
    CHECK(local_contrast(flat, box) == doctest::Approx(1.0).epsilon(1e-15));

    GrayImage bright = flat;
    for (int y = 5; y < 8; ++y)
        for (int x = 5; x < 8; ++x) bright.at(x, y) = 100;
    CHECK(local_contrast(bright, box) == doctest::Approx(2.0).epsilon(1e-15));

    // a neighbor inside the ring raises the ring mean, lowering contrast
    GrayImage crowded = bright;
    crowded.at(9, 6) = 90;
    crowded.at(9, 7) = 90;
    CHECK(local_contrast(crowded, box) < local_contrast(bright, box));

    // doubling intensity leaves the ratio unchanged (values stay <= 255)
    GrayImage doubled(12, 12, 100);
    for (int y = 5; y < 8; ++y)
        for (int x = 5; x < 8; ++x) doubled.at(x, y) = 200;
    CHECK(local_contrast(doubled, box) == doctest::Approx(local_contrast(bright, box)));

    GrayImage dark(12, 12, 0);
    dark.at(6, 6) = 10;
    CHECK(std::isinf(local_contrast(dark, BBox(5, 5, 8, 8))));

    GrayImage tiny(4, 4, 10);
    CHECK_THROWS_AS(local_contrast(tiny, BBox(0, 0, 4, 4)), ParamError);
}

TEST_CASE("dataset_stats: single known target and histogram totals") {
    fs::path root = fs::temp_directory_path() / "irforge_stats";
    fs::remove_all(root);

    compose::DemoInputsSpec demo;
    demo.images = 3;
    demo.width = demo.height = 128;
    demo.seed = 77;
    compose::make_demo_inputs((root / "in").string(), demo);

    compose::GenerationConfig cfg;
    cfg.seed = 5;
    cfg.base_dir = (root / "in" / "bases").string();
    cfg.mask_dir = (root / "in" / "masks").string();
    cfg.library_dir = (root / "in" / "library").string();
    cfg.out_dir = (root / "out").string();
    compose::Manifest manifest = compose::emit_dataset(cfg);

    DatasetStats stats = dataset_stats(cfg.out_dir);
    CHECK(stats.total_targets == manifest.total_targets);

    int64_t size_total = 0;
    for (const auto& [dims, count] : stats.size_histogram) {
        CHECK(dims.first <= 5);
        CHECK(dims.second <= 5);
        size_total += count;
    }
    CHECK(size_total == stats.total_targets);

    int64_t contrast_total = 0;
    for (int64_t c : stats.contrast_histogram) contrast_total += c;
    CHECK(contrast_total == stats.total_targets);

    int64_t brightness_total = 0;
    for (int64_t c : stats.brightness_histogram) brightness_total += c;
    CHECK(brightness_total == stats.total_targets);

    CHECK(stats.mean_bbox_side <= 5.0);
    CHECK(stats.mean_target_area > 0.0);
    CHECK(stats.to_json().find("mean_target_area") != std::string::npos);

    // hand-checkable one-target dataset
    fs::path tiny = root / "tiny";
    fs::create_directories(tiny / "images");
    fs::create_directories(tiny / "annotations" / "00000");
    GrayImage img(32, 32, 40);
    img.at(10, 10) = 120;
    img.at(11, 10) = 120;
    write_gray_png((tiny / "images" / "00000.png").string(), img);
    Annotation ann;
    ann.boxes = {BBox(10, 10, 12, 11)};
    ann.points = {{11.0, 10.5}};
    ann.mask = SkyMask(32, 32, 0);
    ann.mask.at(10, 10) = 1;
    ann.mask.at(11, 10) = 1;
    write_annotation((tiny / "annotations" / "00000").string(), ann);
    std::ofstream mf(tiny / "manifest.json");
    mf << "{\"seed\": 0, \"total_targets\": 1, \"images\": [{\"id\": \"00000\", \"base\": "
          "\"00000.png\", \"split\": \"train\", \"targets\": 1}]}";
    mf.close();

    DatasetStats one = dataset_stats(tiny.string());
    CHECK(one.total_targets == 1);
    CHECK(one.mean_target_area == doctest::Approx(2.0));
    CHECK(one.mean_bbox_side == doctest::Approx(1.5));  // sides 2 and 1
    CHECK(one.brightest_point_fraction == doctest::Approx(1.0));
    CHECK(one.fraction_contrast_below_2 == doctest::Approx(0.0));  // 120/40 = 3
    CHECK(one.size_histogram.at({2, 1}) == 1);
}

TEST_CASE("prediction and ground-truth loaders validate their inputs") {
    fs::path root = fs::temp_directory_path() / "irforge_eval_io";
    fs::remove_all(root);
    fs::create_directories(root);

    std::ofstream good(root / "preds.json");
    good << R"([{"image_id": "00000", "bbox": [1, 2, 5, 6], "score": 0.5}])";
    good.close();
    auto preds = load_predictions((root / "preds.json").string());
    REQUIRE(preds.size() == 1);
    CHECK(preds[0].box == BBox(1, 2, 5, 6));

    std::ofstream bad(root / "bad.json");
    bad << R"([{"image_id": "x", "bbox": [1, 2, 5, 6], "score": 1.5}])";
    bad.close();
    CHECK_THROWS_AS(load_predictions((root / "bad.json").string()), ParamError);
    CHECK_THROWS_AS(load_predictions((root / "absent.json").string()), IoError);
    CHECK_THROWS_AS(load_ground_truth((root / "nowhere").string()), IoError);
}
