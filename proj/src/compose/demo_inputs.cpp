#include "irforge/compose/demo_inputs.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "irforge/png_io.hpp"
#include "irforge/rng.hpp"
#include "irforge/synth/gaussian.hpp"

namespace irforge::compose {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kBaseStreamOffset = 0x100000000ULL;
constexpr uint64_t kChipStreamOffset = 0x200000000ULL;

void add_blob(std::vector<double>& img, int w, int h, double cx, double cy, double sx, double sy,
              double amplitude) {
    int x0 = std::max(0, static_cast<int>(cx - 3 * sx));
    int x1 = std::min(w - 1, static_cast<int>(cx + 3 * sx));
    int y0 = std::max(0, static_cast<int>(cy - 3 * sy));
    int y1 = std::min(h - 1, static_cast<int>(cy + 3 * sy));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = (x - cx) / sx, dy = (y - cy) / sy;
            img[static_cast<size_t>(y) * w + x] += amplitude * std::exp(-0.5 * (dx * dx + dy * dy));
        }
}

}  // namespace

DemoScene make_demo_scene(int width, int height, uint64_t seed, uint64_t index) {
    SeededRng rng = derive_stream(seed, kBaseStreamOffset + index);
    std::vector<double> canvas(static_cast<size_t>(width) * height, 0.0);

    // Horizon with a gentle wave; the sky band always spans at least 45%
    // of the frame so a 20x20 dense area fits.
    double horizon_frac = rng.uniform_real(0.45, 0.75);
    double wave_amp = rng.uniform_real(0.0, 0.04) * height;
    double wave_freq = rng.uniform_real(1.0, 3.0);
    double phase = rng.uniform_real(0.0, 6.28318530717958648);

    double sky_top = rng.uniform_real(40.0, 90.0);
    double sky_bottom = rng.uniform_real(100.0, 150.0);
    double ground_base = rng.uniform_real(60.0, 120.0);

    std::vector<int> horizon(width);
    for (int x = 0; x < width; ++x) {
        double hy = horizon_frac * height + wave_amp * std::sin(wave_freq * 6.2831853 * x / width + phase);
        horizon[x] = std::clamp(static_cast<int>(hy), 1, height - 1);
    }

    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            size_t i = static_cast<size_t>(y) * width + x;
            if (y < horizon[x]) {
                double t = static_cast<double>(y) / std::max(1, horizon[x]);
                canvas[i] = sky_top + (sky_bottom - sky_top) * t + rng.uniform_real(-2.0, 2.0);
            } else {
                canvas[i] = ground_base + rng.uniform_real(-8.0, 8.0);
            }
        }
    }

    // Soft clouds in the sky, brighter clutter blobs on the ground.
    int clouds = static_cast<int>(rng.uniform_int(0, 3));
    for (int c = 0; c < clouds; ++c)
        add_blob(canvas, width, height, rng.uniform_real(0, width),
                 rng.uniform_real(0, horizon_frac * height * 0.8), rng.uniform_real(8, 30),
                 rng.uniform_real(4, 12), rng.uniform_real(5, 25));
    int clutter = static_cast<int>(rng.uniform_int(2, 6));
    for (int c = 0; c < clutter; ++c)
        add_blob(canvas, width, height, rng.uniform_real(0, width),
                 rng.uniform_real(horizon_frac * height, height), rng.uniform_real(1.5, 6),
                 rng.uniform_real(1.5, 6), rng.uniform_real(20, 90));

    DemoScene scene;
    scene.base = GrayImage(width, height);
    scene.mask = SkyMask(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            size_t i = static_cast<size_t>(y) * width + x;
            scene.base.pixels[i] = quantize_intensity(canvas[i]);
            scene.mask.bits[i] = y < horizon[x] ? 1 : 0;
        }
    return scene;
}

GrayImage make_demo_chip(uint64_t seed, uint64_t index) {
    SeededRng rng = derive_stream(seed, kChipStreamOffset + index);
    int w = static_cast<int>(rng.uniform_int(4, 9));
    int h = static_cast<int>(rng.uniform_int(4, 9));
    double peak = rng.uniform_real(90.0, 255.0);
    double sx = rng.uniform_real(0.18, 0.32) * w;
    double sy = rng.uniform_real(0.18, 0.32) * h;
    double cx = 0.5 * w + rng.uniform_real(-0.5, 0.5);
    double cy = 0.5 * h + rng.uniform_real(-0.5, 0.5);

    GrayImage chip(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double dx = (x - cx) / sx, dy = (y - cy) / sy;
            chip.at(x, y) = quantize_intensity(peak * std::exp(-0.5 * (dx * dx + dy * dy)));
        }
    return chip;
}

void make_demo_inputs(const std::string& dir, const DemoInputsSpec& spec, int png_compression) {
    if (spec.images < 1 || spec.chips < 1 || spec.width < 64 || spec.height < 64)
        throw ParamError("demo inputs need >= 1 image, >= 1 chip and dims >= 64");

    fs::create_directories(fs::path(dir) / "bases");
    fs::create_directories(fs::path(dir) / "masks");

    for (int i = 0; i < spec.images; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "%05d.png", i);
        DemoScene scene = make_demo_scene(spec.width, spec.height, spec.seed, i);
        write_gray_png((fs::path(dir) / "bases" / name).string(), scene.base, png_compression);
        write_mask_png((fs::path(dir) / "masks" / name).string(), scene.mask, png_compression);
    }

    std::vector<GrayImage> chips;
    std::vector<std::string> names;
    for (int i = 0; i < spec.chips; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "chip_%03d.png", i);
        chips.push_back(make_demo_chip(spec.seed, i));
        names.emplace_back(name);
    }
    synth::ChipLibrary::write((fs::path(dir) / "library").string(), chips, names);
}

}  // namespace irforge::compose
