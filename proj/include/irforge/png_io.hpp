#pragma once

#include <string>

#include "irforge/image.hpp"

namespace irforge {

// 8-bit grayscale PNG. Sub-8-bit gray inputs are expanded; color or
// 16-bit files are rejected. Masks are stored with 0 / 255 samples.
GrayImage read_gray_png(const std::string& path);
void write_gray_png(const std::string& path, const GrayImage& img, int compression_level = 4);

SkyMask read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const SkyMask& mask, int compression_level = 4);

}  // namespace irforge
