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

#ifndef REXNET_PNG_IO_HPP
#define REXNET_PNG_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rexnet/image.hpp"

namespace rexnet {

/// Decoded PNG. Pixels are channel-interleaved, one uint16 per sample
/// (8-bit files are widened without rescaling).
struct PngData {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint16_t> pixels;
};

/// Throws std::runtime_error naming the file on any decode problem.
PngData read_png(const std::string& path);

// All writers are atomic: temp file in the same directory, then rename.
void write_png_gray8(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
                     int height);
void write_png_gray16(const std::string& path, const std::vector<std::uint16_t>& pixels,
                      int width, int height);
void write_png_rgb8(const std::string& path, const std::vector<std::uint8_t>& pixels, int width,
                    int height);

// Domain-level helpers.
ColorImage load_color_image(const std::string& path);             // 8-bit RGB -> [0,1]
Plane load_gray_unit(const std::string& path);                    // 8/16-bit gray -> [0,1]
Plane load_binary_mask(const std::string& path);                  // gray, >=128 (8-bit scale) -> 1
Plane load_raw_depth(const std::string& path);                    // 16-bit gray, raw counts
void save_unit_gray8(const std::string& path, const Plane& map);  // [0,1] -> 8-bit
void save_color_image(const std::string& path, const ColorImage& img);

/// Atomic text-file write (temp + rename), used for CSV/SVG reports.
void atomic_write_text(const std::string& path, const std::string& content);

}  // namespace rexnet

#endif  // REXNET_PNG_IO_HPP
