// Copyright (c) 2026 The RexNet Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rexnet/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace rexnet {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("PNG error in '" + path + "': " + what);
}

}  // namespace

PngData read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) fail(path, "cannot open file");

    unsigned char sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
        fail(path, "not a PNG file");
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(path, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(path, "png_create_info_struct failed");
    }
    std::vector<std::uint16_t> pixels;
    std::vector<png_bytep> rows;
    std::vector<unsigned char> raw;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "corrupt or truncated image data");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    const int channels = png_get_channels(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);

    raw.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = raw.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    PngData out;
    out.width = static_cast<int>(width);
    out.height = static_cast<int>(height);
    out.channels = channels;
    out.bit_depth = bit_depth;
    out.pixels.resize(static_cast<std::size_t>(width) * height * channels);
    if (bit_depth == 16) {
        for (std::size_t i = 0; i < out.pixels.size(); ++i) {
            out.pixels[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
        }
    } else if (bit_depth == 8) {
        for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = raw[i];
    } else {
        fail(path, "unsupported bit depth " + std::to_string(bit_depth));
    }
    return out;
}

namespace {

void write_png_impl(const std::string& path, const unsigned char* data, int width, int height,
                    int channels, int bit_depth) {
    const std::string tmp = path + ".tmp";
    {
        FilePtr fp(std::fopen(tmp.c_str(), "wb"));
        if (!fp) fail(path, "cannot open temp file for writing");
        png_structp png =
            png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        if (!png) fail(path, "png_create_write_struct failed");
        png_infop info = png_create_info_struct(png);
        if (!info) {
            png_destroy_write_struct(&png, nullptr);
            fail(path, "png_create_info_struct failed");
        }
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            fail(path, "encode failed");
        }
        png_init_io(png, fp.get());
        png_set_compression_level(png, 6);
        const int color = channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
        png_set_IHDR(png, info, width, height, bit_depth, color, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        const std::size_t rowbytes =
            static_cast<std::size_t>(width) * channels * (bit_depth / 8);
        std::vector<png_bytep> rows(height);
        for (int y = 0; y < height; ++y) {
            rows[y] = const_cast<png_bytep>(data + static_cast<std::size_t>(y) * rowbytes);
        }
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void write_png_gray8(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
                     int height) {
    if (pixels.size() != static_cast<std::size_t>(width) * height) {
        fail(path, "pixel buffer size mismatch");
    }
    write_png_impl(path, pixels.data(), width, height, 1, 8);
}

void write_png_gray16(const std::string& path, const std::vector<std::uint16_t>& pixels,
                      int width, int height) {
    if (pixels.size() != static_cast<std::size_t>(width) * height) {
        fail(path, "pixel buffer size mismatch");
    }
    // PNG stores 16-bit samples big-endian.
    std::vector<unsigned char> raw(pixels.size() * 2);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        raw[2 * i] = static_cast<unsigned char>(pixels[i] >> 8);
        raw[2 * i + 1] = static_cast<unsigned char>(pixels[i] & 0xff);
    }
    write_png_impl(path, raw.data(), width, height, 1, 16);
}

void write_png_rgb8(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
                    int height) {
    if (pixels.size() != static_cast<std::size_t>(width) * height * 3) {
        fail(path, "pixel buffer size mismatch");
    }
    write_png_impl(path, pixels.data(), width, height, 3, 8);
}

ColorImage load_color_image(const std::string& path) {
    PngData png = read_png(path);
    if (png.channels != 3) fail(path, "expected an RGB image");
    const double scale = png.bit_depth == 16 ? 65535.0 : 255.0;
    ColorImage img(png.height, png.width);
    for (std::size_t i = 0; i < png.pixels.size(); ++i) {
        img.rgb[i] = static_cast<double>(png.pixels[i]) / scale;
    }
    return img;
}

Plane load_gray_unit(const std::string& path) {
    PngData png = read_png(path);
    if (png.channels != 1) fail(path, "expected a grayscale image");
    const double scale = png.bit_depth == 16 ? 65535.0 : 255.0;
    Plane p(png.height, png.width);
    for (std::size_t i = 0; i < p.v.size(); ++i) {
        p.v[i] = std::clamp(static_cast<double>(png.pixels[i]) / scale, 0.0, 1.0);
    }
    return p;
}

Plane load_binary_mask(const std::string& path) {
    PngData png = read_png(path);
    if (png.channels != 1) fail(path, "expected a grayscale mask");
    const int threshold = png.bit_depth == 16 ? 128 * 257 : 128;
    Plane p(png.height, png.width);
    for (std::size_t i = 0; i < p.v.size(); ++i) {
        p.v[i] = png.pixels[i] >= threshold ? 1.0 : 0.0;
    }
    return p;
}

Plane load_raw_depth(const std::string& path) {
    PngData png = read_png(path);
    if (png.channels != 1) fail(path, "expected a grayscale depth image");
    Plane p(png.height, png.width);
    for (std::size_t i = 0; i < p.v.size(); ++i) p.v[i] = static_cast<double>(png.pixels[i]);
    return p;
}

void save_unit_gray8(const std::string& path, const Plane& map) {
    std::vector<std::uint8_t> pixels(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) {
        const double v = std::clamp(map.v[i], 0.0, 1.0);
        pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    write_png_gray8(path, pixels, map.w, map.h);
}

void save_color_image(const std::string& path, const ColorImage& img) {
    std::vector<std::uint8_t> pixels(img.rgb.size());
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.rgb[i], 0.0, 1.0) * 255.0));
    }
    write_png_rgb8(path, pixels, img.w, img.h);
}

void atomic_write_text(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open for writing: " + tmp);
        os.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!os) throw std::runtime_error("short write: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace rexnet
