#include "irforge/synth/chip.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "irforge/png_io.hpp"

namespace irforge::synth {

namespace fs = std::filesystem;
using nlohmann::json;

TargetChip chip_from_image(const GrayImage& img) {
    TargetChip chip(img.width, img.height);
    for (size_t i = 0; i < img.pixels.size(); ++i) chip.values[i] = img.pixels[i];
    return chip;
}

TargetChip resize_chip(const TargetChip& chip, int new_w, int new_h) {
    if (new_w < 1 || new_w > kChipDimCap || new_h < 1 || new_h > kChipDimCap)
        throw ParamError("resize_chip target dims must be in [1, " +
                         std::to_string(kChipDimCap) + "]");
    if (new_w == chip.width && new_h == chip.height) return chip;

    // Half-pixel-center sampling with edge clamping, so a same-size
    // resample reproduces the input exactly.
    TargetChip out(new_w, new_h);
    double scale_x = static_cast<double>(chip.width) / new_w;
    double scale_y = static_cast<double>(chip.height) / new_h;
    for (int y = 0; y < new_h; ++y) {
        double sy = (y + 0.5) * scale_y - 0.5;
        int y0 = static_cast<int>(std::floor(sy));
        double fy = sy - y0;
        int yc0 = std::clamp(y0, 0, chip.height - 1);
        int yc1 = std::clamp(y0 + 1, 0, chip.height - 1);
        for (int x = 0; x < new_w; ++x) {
            double sx = (x + 0.5) * scale_x - 0.5;
            int x0 = static_cast<int>(std::floor(sx));
            double fx = sx - x0;
            int xc0 = std::clamp(x0, 0, chip.width - 1);
            int xc1 = std::clamp(x0 + 1, 0, chip.width - 1);
            double top = chip.at(xc0, yc0) * (1.0 - fx) + chip.at(xc1, yc0) * fx;
            double bot = chip.at(xc0, yc1) * (1.0 - fx) + chip.at(xc1, yc1) * fx;
            out.at(x, y) = top * (1.0 - fy) + bot * fy;
        }
    }
    return out;
}

std::vector<double> paste_target(const std::vector<double>& window, const TargetChip& chip,
                                 const GaussianParams& p) {
    if (window.size() != chip.values.size())
        throw ParamError("paste_target: window and chip dims differ");
    std::vector<double> out(window.size());
    for (int y = 0; y < chip.height; ++y) {
        for (int x = 0; x < chip.width; ++x) {
            size_t i = static_cast<size_t>(y) * chip.width + x;
            double g = gaussian_at(x, y, chip.width, chip.height, p);
            out[i] = window[i] + chip.values[i] * p.lambda * g;
        }
    }
    return out;
}

void ChipLibrary::add(TargetChip chip, std::string name) {
    chips_.push_back(std::move(chip));
    names_.push_back(std::move(name));
}

ChipLibrary ChipLibrary::load(const std::string& dir) {
    fs::path index_path = fs::path(dir) / "library.json";
    std::ifstream in(index_path);
    if (!in) throw IoError("cannot open chip library index: " + index_path.string());
    json index;
    try {
        in >> index;
    } catch (const json::exception& e) {
        throw IoError("malformed " + index_path.string() + ": " + e.what());
    }
    if (!index.contains("chips") || !index["chips"].is_array())
        throw IoError("library.json missing \"chips\" array: " + index_path.string());

    ChipLibrary lib;
    for (const auto& entry : index["chips"]) {
        std::string name = entry.get<std::string>();
        fs::path chip_path = fs::path(dir) / name;
        GrayImage img = read_gray_png(chip_path.string());
        if (img.width > kLibraryDimCap || img.height > kLibraryDimCap)
            throw ParamError("chip exceeds " + std::to_string(kLibraryDimCap) + "x" +
                             std::to_string(kLibraryDimCap) + ": " + chip_path.string());
        lib.add(chip_from_image(img), name);
    }
    if (lib.size() == 0) throw IoError("chip library is empty: " + index_path.string());
    return lib;
}

void ChipLibrary::write(const std::string& dir, const std::vector<GrayImage>& chips,
                        const std::vector<std::string>& names) {
    if (chips.size() != names.size()) throw ParamError("chip/name count mismatch");
    fs::create_directories(dir);
    json index;
    index["chips"] = json::array();
    for (size_t i = 0; i < chips.size(); ++i) {
        write_gray_png((fs::path(dir) / names[i]).string(), chips[i]);
        index["chips"].push_back(names[i]);
    }
    std::ofstream out(fs::path(dir) / "library.json", std::ios::binary);
    if (!out) throw IoError("cannot write library.json in " + dir);
    out << index.dump(2) << "\n";
}

}  // namespace irforge::synth
