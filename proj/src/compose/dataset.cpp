#include "irforge/compose/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "irforge/annotation_io.hpp"
#include "irforge/png_io.hpp"

namespace irforge::compose {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = std::any_of(known.begin(), known.end(),
                              [&](const char* k) { return it.key() == k; });
        if (!ok) throw ParamError("unknown config key \"" + it.key() + "\" in " + where);
    }
}

void parse_cluster(const json& j, ClusterSpec& spec) {
    reject_unknown_keys(j,
                        {"region_size", "clusters_min", "clusters_max", "targets_min",
                         "targets_max", "chip_min", "chip_max", "spacing_min", "spacing_max"},
                        "cluster");
    spec.region_size = j.value("region_size", spec.region_size);
    spec.clusters_min = j.value("clusters_min", spec.clusters_min);
    spec.clusters_max = j.value("clusters_max", spec.clusters_max);
    spec.targets_min = j.value("targets_min", spec.targets_min);
    spec.targets_max = j.value("targets_max", spec.targets_max);
    spec.chip_min = j.value("chip_min", spec.chip_min);
    spec.chip_max = j.value("chip_max", spec.chip_max);
    spec.spacing_min = j.value("spacing_min", spec.spacing_min);
    spec.spacing_max = j.value("spacing_max", spec.spacing_max);
}

// Configured ranges may narrow the legal parameter intervals but not
// leave them.
void parse_range(const json& j, const char* key, double& lo, double& hi, double legal_lo,
                 double legal_hi) {
    if (!j.contains(key)) return;
    const json& r = j.at(key);
    if (!r.is_array() || r.size() != 2) throw ParamError(std::string("gauss.") + key + " must be [lo, hi]");
    lo = r[0].get<double>();
    hi = r[1].get<double>();
    if (!(lo <= hi)) throw ParamError(std::string("gauss.") + key + " has lo > hi");
    if (lo < legal_lo || hi > legal_hi)
        throw ParamError(std::string("gauss.") + key + " must stay within [" +
                         std::to_string(legal_lo) + ", " + std::to_string(legal_hi) + "]");
}

void parse_gauss(const json& j, synth::GaussianParamRanges& g) {
    reject_unknown_keys(j, {"rho", "sigma", "theta", "lambda"}, "gauss");
    parse_range(j, "rho", g.rho_min, g.rho_max, 0.0, 0.2);
    parse_range(j, "sigma", g.sigma_min, g.sigma_max, 0.3, 0.6);
    parse_range(j, "theta", g.theta_min, g.theta_max, -90.0, 90.0);
    parse_range(j, "lambda", g.lambda_min, g.lambda_max, 0.5, 1.0);
}

std::vector<std::string> list_pngs(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw IoError("no .png files in " + dir);
    return names;
}

std::string image_id(size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05zu", index);
    return buf;
}

// Deterministic split assignment: contiguous index ranges in sorted
// base-name order, sized by the configured fractions.
std::vector<std::string> assign_splits(const std::map<std::string, double>& splits, size_t n) {
    double total = 0.0;
    for (const auto& [name, frac] : splits) {
        if (frac < 0.0) throw ParamError("negative split fraction: " + name);
        total += frac;
    }
    if (splits.empty() || total <= 0.0) throw ParamError("splits must have positive total weight");

    std::vector<std::string> out(n);
    size_t assigned = 0;
    size_t done_groups = 0;
    for (const auto& [name, frac] : splits) {
        size_t count = (++done_groups == splits.size())
                           ? n - assigned
                           : static_cast<size_t>(frac / total * n + 0.5);
        count = std::min(count, n - assigned);
        for (size_t i = 0; i < count; ++i) out[assigned + i] = name;
        assigned += count;
    }
    for (; assigned < n; ++assigned) out[assigned] = splits.begin()->first;
    return out;
}

}  // namespace

GenerationConfig GenerationConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParamError(std::string("malformed config JSON: ") + e.what());
    }
    reject_unknown_keys(j,
                        {"seed", "base_dir", "mask_dir", "library_dir", "out_dir", "splits",
                         "cluster", "gauss", "sky_only", "mask_threshold", "png_compression"},
                        "config");
    GenerationConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.base_dir = j.value("base_dir", cfg.base_dir);
        cfg.mask_dir = j.value("mask_dir", cfg.mask_dir);
        cfg.library_dir = j.value("library_dir", cfg.library_dir);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        if (j.contains("splits")) {
            cfg.splits.clear();
            for (auto it = j["splits"].begin(); it != j["splits"].end(); ++it)
                cfg.splits[it.key()] = it.value().get<double>();
        }
        if (j.contains("cluster")) parse_cluster(j["cluster"], cfg.scene.cluster);
        if (j.contains("gauss")) parse_gauss(j["gauss"], cfg.scene.gauss);
        cfg.scene.sky_only = j.value("sky_only", cfg.scene.sky_only);
        cfg.scene.mask_threshold = j.value("mask_threshold", cfg.scene.mask_threshold);
        cfg.png_compression = j.value("png_compression", cfg.png_compression);
    } catch (const json::exception& e) {
        throw ParamError(std::string("bad config value: ") + e.what());
    }
    validate(cfg.scene.cluster);
    return cfg;
}

GenerationConfig GenerationConfig::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string GenerationConfig::to_json_text() const {
    json j;
    j["seed"] = seed;
    j["base_dir"] = base_dir;
    j["mask_dir"] = mask_dir;
    j["library_dir"] = library_dir;
    j["out_dir"] = out_dir;
    j["splits"] = splits;
    j["cluster"] = {{"region_size", scene.cluster.region_size},
                    {"clusters_min", scene.cluster.clusters_min},
                    {"clusters_max", scene.cluster.clusters_max},
                    {"targets_min", scene.cluster.targets_min},
                    {"targets_max", scene.cluster.targets_max},
                    {"chip_min", scene.cluster.chip_min},
                    {"chip_max", scene.cluster.chip_max},
                    {"spacing_min", scene.cluster.spacing_min},
                    {"spacing_max", scene.cluster.spacing_max}};
    j["gauss"] = {{"rho", {scene.gauss.rho_min, scene.gauss.rho_max}},
                  {"sigma", {scene.gauss.sigma_min, scene.gauss.sigma_max}},
                  {"theta", {scene.gauss.theta_min, scene.gauss.theta_max}},
                  {"lambda", {scene.gauss.lambda_min, scene.gauss.lambda_max}}};
    j["sky_only"] = scene.sky_only;
    j["mask_threshold"] = scene.mask_threshold;
    j["png_compression"] = png_compression;
    return j.dump(2) + "\n";
}

Manifest Manifest::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("malformed manifest " + path + ": " + e.what());
    }
    Manifest m;
    try {
        m.seed = j.at("seed").get<uint64_t>();
        m.total_targets = j.at("total_targets").get<int64_t>();
        for (const auto& e : j.at("images")) {
            ManifestEntry entry;
            entry.id = e.at("id").get<std::string>();
            entry.base_name = e.at("base").get<std::string>();
            entry.split = e.at("split").get<std::string>();
            entry.targets = e.at("targets").get<int>();
            m.images.push_back(entry);
        }
        if (j.contains("skipped"))
            for (const auto& s : j["skipped"]) m.skipped.push_back(s.get<std::string>());
    } catch (const json::exception& e) {
        throw IoError("malformed manifest " + path + ": " + e.what());
    }
    return m;
}

int clamp_thread_count(int requested) {
    int n = std::max(1, requested);
    if (const char* env = std::getenv("FORGE_THREADS")) {
        int cap = std::atoi(env);
        if (cap >= 1) n = std::min(n, cap);
    }
    return n;
}

Manifest emit_dataset(const GenerationConfig& config, int threads) {
    validate(config.scene.cluster);
    std::vector<std::string> bases = list_pngs(config.base_dir);

    fs::create_directories(fs::path(config.out_dir) / "images");
    fs::create_directories(fs::path(config.out_dir) / "annotations");
    fs::create_directories(fs::path(config.out_dir) / "masks_sky");

    synth::ChipLibrary library = synth::ChipLibrary::load(config.library_dir);
    std::vector<std::string> split_of = assign_splits(config.splits, bases.size());

    struct Slot {
        bool skipped = false;
        int targets = 0;
    };
    std::vector<Slot> slots(bases.size());

    threads = clamp_thread_count(threads);
    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= bases.size()) return;
            try {
                std::string id = image_id(i);
                GrayImage base = read_gray_png((fs::path(config.base_dir) / bases[i]).string());
                fs::path mask_path = fs::path(config.mask_dir) / bases[i];
                if (!fs::exists(mask_path))
                    throw IoError("missing sky mask: " + mask_path.string());
                SkyMask mask = read_mask_png(mask_path.string());

                SeededRng rng = derive_stream(config.seed, i);
                std::pair<GrayImage, Annotation> scene;
                try {
                    scene = compose_scene(base, mask, library, config.scene, rng);
                } catch (const SkyTooSmallError&) {
                    slots[i].skipped = true;
                    continue;
                }

                fs::path out(config.out_dir);
                write_gray_png((out / "images" / (id + ".png")).string(), scene.first,
                               config.png_compression);
                write_annotation((out / "annotations" / id).string(), scene.second,
                                 config.png_compression);
                write_mask_png((out / "masks_sky" / (id + ".png")).string(), mask,
                               config.png_compression);
                slots[i].targets = static_cast<int>(scene.second.boxes.size());
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(bases.size());
                return;
            }
        }
    };

    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    Manifest manifest;
    manifest.seed = config.seed;
    json out_images = json::array();
    for (size_t i = 0; i < bases.size(); ++i) {
        if (slots[i].skipped) {
            manifest.skipped.push_back(bases[i]);
            continue;
        }
        ManifestEntry entry{image_id(i), bases[i], split_of[i], slots[i].targets};
        manifest.total_targets += entry.targets;
        manifest.images.push_back(entry);
        out_images.push_back({{"id", entry.id},
                              {"base", entry.base_name},
                              {"split", entry.split},
                              {"targets", entry.targets}});
    }

    json out_manifest;
    out_manifest["seed"] = manifest.seed;
    out_manifest["images"] = out_images;
    out_manifest["skipped"] = manifest.skipped;
    out_manifest["total_targets"] = manifest.total_targets;

    auto write_text = [](const fs::path& p, const std::string& text) {
        fs::path tmp = p;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary);
            if (!out) throw IoError("cannot create: " + p.string());
            out << text;
        }
        std::error_code ec;
        fs::rename(tmp, p, ec);
        if (ec) throw IoError("rename failed: " + p.string());
    };
    write_text(fs::path(config.out_dir) / "manifest.json", out_manifest.dump(2) + "\n");
    write_text(fs::path(config.out_dir) / "config_effective.json", config.to_json_text());
    return manifest;
}

}  // namespace irforge::compose
