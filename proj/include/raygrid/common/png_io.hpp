// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace raygrid::common {

/// Writes an 8-bit RGB image; `rgb` is row-major, 3 bytes per pixel.
void save_png(const std::filesystem::path& path, int height, int width,
              const std::vector<uint8_t>& rgb);

/// Reads a PNG as 8-bit RGB, converting other formats on load.
std::vector<uint8_t> load_png(const std::filesystem::path& path, int& height,
                              int& width);

}  // namespace raygrid::common
