#pragma once

#include <cstdint>
#include <string>

#include "irforge/image.hpp"
#include "irforge/synth/chip.hpp"

namespace irforge::compose {

// Procedural stand-in inputs for trying the generator without real
// imagery: gradient skies with cloud blobs over cluttered ground, plus
// a library of small blob chips. Every base keeps a sky band deep
// enough for at least one dense area.
struct DemoInputsSpec {
    int images = 8;
    int width = 256;
    int height = 256;
    int chips = 24;
    uint64_t seed = 1;
};

struct DemoScene {
    GrayImage base;
    SkyMask mask;
};

DemoScene make_demo_scene(int width, int height, uint64_t seed, uint64_t index);
GrayImage make_demo_chip(uint64_t seed, uint64_t index);

// Writes <dir>/bases/NNNNN.png, <dir>/masks/NNNNN.png and a chip
// library under <dir>/library/.
void make_demo_inputs(const std::string& dir, const DemoInputsSpec& spec,
                      int png_compression = 4);

}  // namespace irforge::compose
