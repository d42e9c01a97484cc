#include "irforge/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <vector>

#include "irforge/errors.hpp"

namespace irforge {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const char* what) {
    throw IoError(std::string(what) + ": " + path);
}

GrayImage read_impl(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(path, "cannot open PNG");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(path, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(path, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "corrupt PNG");
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (color_type != PNG_COLOR_TYPE_GRAY || bit_depth > 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "expected 8-bit grayscale PNG");
    }
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = img.pixels.data() + static_cast<size_t>(y) * w;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_impl(const std::string& path, const uint8_t* data, int width, int height,
                int compression_level) {
    // Write to a sibling temp file and rename, so readers never observe
    // a partially written image.
    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";

    {
        FilePtr fp(std::fopen(tmp.c_str(), "wb"));
        if (!fp) fail(path, "cannot create PNG");

        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (!png) fail(path, "png_create_write_struct failed");
        png_infop info = png_create_info_struct(png);
        if (!info) {
            png_destroy_write_struct(&png, nullptr);
            fail(path, "png_create_info_struct failed");
        }
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            fail(path, "PNG write failed");
        }

        png_init_io(png, fp.get());
        png_set_compression_level(png, compression_level);
        png_set_filter(png, 0, PNG_FILTER_SUB);
        png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);

        std::vector<png_bytep> rows(height);
        for (int y = 0; y < height; ++y)
            rows[y] = const_cast<png_bytep>(data + static_cast<size_t>(y) * width);
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    }

    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) fail(path, "rename failed");
}

}  // namespace

GrayImage read_gray_png(const std::string& path) { return read_impl(path); }

void write_gray_png(const std::string& path, const GrayImage& img, int compression_level) {
    write_impl(path, img.pixels.data(), img.width, img.height, compression_level);
}

SkyMask read_mask_png(const std::string& path) {
    GrayImage img = read_impl(path);
    SkyMask mask(img.width, img.height);
    for (size_t i = 0; i < img.pixels.size(); ++i) mask.bits[i] = img.pixels[i] >= 128 ? 1 : 0;
    return mask;
}

void write_mask_png(const std::string& path, const SkyMask& mask, int compression_level) {
    std::vector<uint8_t> bytes(mask.bits.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask.bits[i] ? 255 : 0;
    write_impl(path, bytes.data(), mask.width, mask.height, compression_level);
}

}  // namespace irforge
