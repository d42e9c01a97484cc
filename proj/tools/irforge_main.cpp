#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "irforge/annotation_io.hpp"
#include "irforge/compose/dataset.hpp"
#include "irforge/compose/demo_inputs.hpp"
#include "irforge/eval/metrics.hpp"
#include "irforge/eval/stats.hpp"
#include "irforge/exchange/reference.hpp"
#include "irforge/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

int run_synth(const std::string& config_path, std::optional<uint64_t> seed,
              const std::string& out_override, int demo_images, int demo_size, int threads,
              bool verbose) {
    irforge::compose::GenerationConfig cfg;
    if (!config_path.empty())
        cfg = irforge::compose::GenerationConfig::from_json_file(config_path);
    if (seed) cfg.seed = *seed;
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (cfg.out_dir.empty()) throw irforge::ParamError("synth needs --out or config out_dir");

    if (demo_images > 0) {
        irforge::compose::DemoInputsSpec demo;
        demo.images = demo_images;
        demo.width = demo.height = demo_size;
        demo.seed = cfg.seed;
        fs::path demo_dir = fs::path(cfg.out_dir) / "demo_inputs";
        irforge::compose::make_demo_inputs(demo_dir.string(), demo, cfg.png_compression);
        cfg.base_dir = (demo_dir / "bases").string();
        cfg.mask_dir = (demo_dir / "masks").string();
        cfg.library_dir = (demo_dir / "library").string();
        if (verbose) std::cerr << "demo inputs written to " << demo_dir << "\n";
    }
    if (cfg.base_dir.empty() || cfg.mask_dir.empty() || cfg.library_dir.empty())
        throw irforge::ParamError("synth needs base_dir, mask_dir and library_dir (or --demo)");

    irforge::compose::Manifest manifest = irforge::compose::emit_dataset(cfg, threads);
    if (verbose)
        std::cerr << "generated " << manifest.images.size() << " images, "
                  << manifest.total_targets << " targets, " << manifest.skipped.size()
                  << " skipped\n";
    std::cout << "{\"images\": " << manifest.images.size()
              << ", \"total_targets\": " << manifest.total_targets
              << ", \"skipped\": " << manifest.skipped.size() << "}\n";
    return kExitOk;
}

int run_augment(const std::string& image_path, const std::string& mask_path,
                const std::string& ann_dir, const std::string& library_dir,
                const std::string& config_path, uint64_t seed, const std::string& out_dir) {
    irforge::compose::GenerationConfig cfg;
    if (!config_path.empty())
        cfg = irforge::compose::GenerationConfig::from_json_file(config_path);

    irforge::GrayImage img = irforge::read_gray_png(image_path);
    irforge::SkyMask mask = irforge::read_mask_png(mask_path);
    irforge::Annotation ann;
    if (!ann_dir.empty()) {
        ann = irforge::read_annotation(ann_dir);
    } else {
        ann.mask = irforge::SkyMask(img.width, img.height, 0);
    }
    irforge::synth::ChipLibrary library = irforge::synth::ChipLibrary::load(library_dir);

    irforge::SeededRng rng = irforge::derive_stream(seed, 0);
    auto [augmented, merged] =
        irforge::compose::bag_cp_augment(img, mask, ann, library, cfg.scene, rng);

    fs::create_directories(out_dir);
    irforge::write_gray_png((fs::path(out_dir) / "augmented.png").string(), augmented,
                            cfg.png_compression);
    irforge::write_annotation((fs::path(out_dir) / "annotation").string(), merged,
                              cfg.png_compression);
    std::cout << "{\"targets_before\": " << ann.boxes.size()
              << ", \"targets_after\": " << merged.boxes.size() << "}\n";
    return kExitOk;
}

int run_exchange_demo(int c, int h, int w, double p, const std::string& mechanism,
                      const std::string& selection, int adapter_hidden, bool no_adapter,
                      uint64_t seed, const std::string& out_dir, bool use_f32) {
    namespace ex = irforge::exchange;
    ex::ExchangeConfig cfg;
    cfg.p = p;
    cfg.mechanism = ex::mechanism_from_string(mechanism);
    cfg.selection = ex::selection_from_string(selection);
    cfg.adapter_hidden = adapter_hidden;
    cfg.adapter_enabled = !no_adapter;

    irforge::SeededRng init = irforge::derive_stream(seed, 0);
    ex::ExchangeWeights w1 = ex::random_weights<double>(c, adapter_hidden, init);
    ex::ExchangeWeights w2 = ex::random_weights<double>(c, adapter_hidden, init);
    ex::FeatureMap x1 = ex::random_tensor<double>(c, h, w, init);
    ex::FeatureMap x2 = ex::random_tensor<double>(c, h, w, init);

    irforge::SeededRng rng_fast = irforge::derive_stream(seed, 1);
    irforge::SeededRng rng_ref = irforge::derive_stream(seed, 1);
    ex::ExchangePair<double> fast = ex::run_exchange(x1, x2, cfg, w1, w2, &rng_fast);
    ex::ExchangePair<double> oracle = ex::ref::run_exchange(x1, x2, cfg, w1, w2, &rng_ref);
    double err = std::max(ex::max_abs_diff(fast.y1, oracle.y1),
                          ex::max_abs_diff(fast.y2, oracle.y2));

    json out;
    std::vector<double> m = ex::channel_attention(x1, w1.attention);
    out["m"] = m;
    out["I_topk"] = fast.sel1.indices;
    out["I_topk_2"] = fast.sel2.indices;
    out["k"] = fast.sel1.k;
    out["max_abs_err_vs_reference"] = err;
    out["mechanism"] = mechanism;
    out["selection"] = selection;

    if (use_f32) {
        ex::ExchangeWeightsT<float> w1f, w2f;
        auto narrow = [](const ex::ExchangeWeights& src) {
            ex::ExchangeWeightsT<float> dst;
            dst.attention = ex::AttentionParamsT<float>(src.attention.channels);
            dst.attention.gate_kernel.assign(src.attention.gate_kernel.begin(),
                                             src.attention.gate_kernel.end());
            dst.attention.gate_bias = static_cast<float>(src.attention.gate_bias);
            dst.attention.local_kernel.assign(src.attention.local_kernel.begin(),
                                              src.attention.local_kernel.end());
            dst.attention.local_bias.assign(src.attention.local_bias.begin(),
                                            src.attention.local_bias.end());
            dst.adapter = ex::AdapterWeightsT<float>(src.adapter.channels, src.adapter.hidden);
            dst.adapter.w1.assign(src.adapter.w1.begin(), src.adapter.w1.end());
            dst.adapter.b1.assign(src.adapter.b1.begin(), src.adapter.b1.end());
            dst.adapter.w2.assign(src.adapter.w2.begin(), src.adapter.w2.end());
            dst.adapter.b2.assign(src.adapter.b2.begin(), src.adapter.b2.end());
            return dst;
        };
        w1f = narrow(w1);
        w2f = narrow(w2);
        ex::FeatureMap32 x1f(c, h, w), x2f(c, h, w);
        x1f.data.assign(x1.data.begin(), x1.data.end());
        x2f.data.assign(x2.data.begin(), x2.data.end());
        irforge::SeededRng rng_f32 = irforge::derive_stream(seed, 1);
        auto fast32 = ex::run_exchange(x1f, x2f, cfg, w1f, w2f, &rng_f32);
        double err32 = 0.0;
        for (size_t i = 0; i < fast32.y1.data.size(); ++i) {
            err32 = std::max(err32, std::abs(fast32.y1.data[i] - oracle.y1.data[i]));
            err32 = std::max(err32, std::abs(fast32.y2.data[i] - oracle.y2.data[i]));
        }
        out["f32_max_abs_err_vs_reference"] = err32;
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        ex::save_weights((fs::path(out_dir) / "weights.bin").string(), w1);
    }
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int run_eval(const std::string& pred_path, const std::string& gt_dir, double iou_thr,
             const std::string& interp, const std::string& format) {
    auto preds = irforge::eval::load_predictions(pred_path);
    auto gts = irforge::eval::load_ground_truth(gt_dir);
    irforge::eval::EvalReport report = irforge::eval::evaluate_detections(preds, gts);

    if (format == "csv") {
        std::cout << report.to_csv();
    } else {
        json j = json::parse(report.to_json());
        j["selected"] = {{"iou", iou_thr},
                         {"interpolation", interp},
                         {"ap", irforge::eval::average_precision(
                                    preds, gts, iou_thr,
                                    irforge::eval::interpolation_from_string(interp))}};
        std::cout << j.dump(2) << "\n";
    }
    return kExitOk;
}

int run_stats(const std::string& data_dir, const std::string& format) {
    irforge::eval::DatasetStats stats = irforge::eval::dataset_stats(data_dir);
    std::cout << (format == "csv" ? stats.to_csv() : stats.to_json());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clustered infrared small-target dataset synthesis, feature-exchange kernel "
                 "demo, and detection evaluation"};
    app.set_help_flag("--help", "print help and exit");  // frees -h / --h for tensor dims
    app.require_subcommand(1);
    app.fallthrough();
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "log progress to stderr");

    // synth
    auto* synth = app.add_subcommand(
        "synth",
        "generate a clustered-target dataset. Defaults: 1-3 dense areas of 20x20 px per "
        "image, 8-12 chips each, chips resized within 5x5 px, border spacing 1-2 px; "
        "blend weights use relative center offsets in [0, 0.2], relative spreads in "
        "[0.3, 0.6], rotation in [-90, 90] deg, brightness scale in [0.5, 1]");
    std::string synth_config, synth_out;
    std::optional<uint64_t> synth_seed;
    int demo_images = 0, demo_size = 256, threads = 1;
    synth->add_option("--config", synth_config,
                      "generation config JSON (defaults above; any key may be overridden)");
    synth->add_option("--seed", synth_seed, "master seed (overrides config)");
    synth->add_option("--out", synth_out, "output directory (overrides config)");
    synth->add_option("--demo", demo_images,
                      "generate N procedural base images + masks + chip library first");
    synth->add_option("--demo-size", demo_size, "demo base image side length")
        ->default_val(256);
    synth->add_option("--threads", threads, "worker threads (FORGE_THREADS caps this)")
        ->default_val(1);

    // augment
    auto* augment = app.add_subcommand("augment", "preview copy-paste augmentation of one image");
    std::string aug_image, aug_mask, aug_ann, aug_library, aug_config, aug_out;
    uint64_t aug_seed = 0;
    augment->add_option("--image", aug_image, "input grayscale PNG")->required();
    augment->add_option("--mask", aug_mask, "sky mask PNG")->required();
    augment->add_option("--ann", aug_ann, "existing annotation directory");
    augment->add_option("--library", aug_library, "chip library directory")->required();
    augment->add_option("--config", aug_config, "generation config JSON for ranges");
    augment->add_option("--seed", aug_seed, "seed")->default_val(0);
    augment->add_option("--out", aug_out, "output directory")->required();

    // exchange-demo
    auto* demo = app.add_subcommand("exchange-demo", "run the feature-exchange kernel against "
                                                     "its brute-force reference");
    int c = 8, h = 4, w = 4, adapter_hidden = 64;
    double p = 0.5;
    std::string mechanism = "channel", selection = "dynamic", demo_out;
    bool no_adapter = false, use_f32 = false;
    uint64_t demo_seed = 0;
    demo->add_option("--c", c, "channels")->default_val(8);
    demo->add_option("--h", h, "height")->default_val(4);
    demo->add_option("--w", w, "width")->default_val(4);
    demo->add_option("--p", p, "exchange fraction in (0,1)")->default_val(0.5);
    demo->add_option("--mechanism", mechanism,
                     "channel | spatial | channel_then_spatial | spatial_then_channel")
        ->default_val("channel");
    demo->add_option("--selection", selection, "dynamic | fixed | random")
        ->default_val("dynamic");
    demo->add_option("--adapter-hidden", adapter_hidden, "adapter hidden width")
        ->default_val(64);
    demo->add_flag("--no-adapter", no_adapter, "disable the adapter MLP");
    demo->add_flag("--f32", use_f32, "also run the float32 forward path");
    demo->add_option("--seed", demo_seed, "seed")->default_val(0);
    demo->add_option("--out", demo_out, "directory for serialized weights");

    // eval
    auto* eval = app.add_subcommand("eval", "score detections against a dataset");
    std::string pred_path, gt_dir, interp = "elevenpoint", eval_format = "json";
    double iou_thr = 0.5;
    eval->add_option("--pred", pred_path, "predictions JSON")->required();
    eval->add_option("--gt", gt_dir, "dataset directory with annotations/")->required();
    eval->add_option("--iou", iou_thr, "IoU threshold for the selected metric")
        ->default_val(0.5);
    eval->add_option("--interp", interp, "elevenpoint | allpoint")->default_val("elevenpoint");
    eval->add_option("--format", eval_format, "json | csv")->default_val("json");

    // stats
    auto* stats = app.add_subcommand("stats", "dataset characterization statistics");
    std::string stats_dir, stats_format = "json";
    stats->add_option("--data", stats_dir, "dataset directory")->required();
    stats->add_option("--format", stats_format, "json | csv")->default_val("json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (synth->parsed())
            return run_synth(synth_config, synth_seed, synth_out, demo_images, demo_size,
                             threads, verbose);
        if (augment->parsed())
            return run_augment(aug_image, aug_mask, aug_ann, aug_library, aug_config, aug_seed,
                               aug_out);
        if (demo->parsed())
            return run_exchange_demo(c, h, w, p, mechanism, selection, adapter_hidden,
                                     no_adapter, demo_seed, demo_out, use_f32);
        if (eval->parsed()) return run_eval(pred_path, gt_dir, iou_thr, interp, eval_format);
        if (stats->parsed()) return run_stats(stats_dir, stats_format);
    } catch (const irforge::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const irforge::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
