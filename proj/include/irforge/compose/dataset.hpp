#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "irforge/compose/scene.hpp"

namespace irforge::compose {

// Everything a generation run needs; serialized as JSON. Unknown keys
// are rejected so a typo cannot silently fall back to a default.
struct GenerationConfig {
    uint64_t seed = 0;
    std::string base_dir;
    std::string mask_dir;
    std::string library_dir;
    std::string out_dir;
    std::map<std::string, double> splits = {{"train", 0.8}, {"val", 0.1}, {"test", 0.1}};
    SceneOptions scene;
    int png_compression = 4;

    static GenerationConfig from_json_file(const std::string& path);
    static GenerationConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
};

struct ManifestEntry {
    std::string id;
    std::string base_name;
    std::string split;
    int targets = 0;
};

struct Manifest {
    uint64_t seed = 0;
    std::vector<ManifestEntry> images;
    std::vector<std::string> skipped;  // base names without a feasible sky window
    int64_t total_targets = 0;

    static Manifest from_json_file(const std::string& path);
};

// Compose one scene per base image and write the output tree:
//   images/NNNNN.png
//   annotations/NNNNN/{boxes.txt,points.csv,mask.png}
//   masks_sky/NNNNN.png
//   manifest.json
//   config_effective.json
// Bases without a feasible sky window are skipped and recorded. Image
// NNNNN always uses RNG stream NNNNN, so results do not depend on the
// worker count.
Manifest emit_dataset(const GenerationConfig& config, int threads = 1);

// Honors the FORGE_THREADS env var as an upper bound.
int clamp_thread_count(int requested);

}  // namespace irforge::compose
