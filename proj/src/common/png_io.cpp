// Copyright 2026 The raygrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "raygrid/common/png_io.hpp"

#include <png.h>

#include "raygrid/common.hpp"

namespace raygrid::common {

void save_png(const std::filesystem::path& path, int height, int width,
              const std::vector<uint8_t>& rgb) {
    detail::check(height > 0 && width > 0, "save_png: empty image");
    detail::check(rgb.size() == static_cast<size_t>(height) * width * 3,
                  "save_png: buffer size does not match dimensions");
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, rgb.data(),
                                 width * 3, nullptr)) {
        throw IoError("failed to write " + path.string() + ": " +
                      image.message);
    }
}

std::vector<uint8_t> load_png(const std::filesystem::path& path, int& height,
                              int& width) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw IoError("failed to read " + path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<uint8_t> rgb(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgb.data(),
                               static_cast<png_int_32>(image.width) * 3,
                               nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        throw IoError("failed to decode " + path.string() + ": " + message);
    }
    height = static_cast<int>(image.height);
    width = static_cast<int>(image.width);
    return rgb;
}

}  // namespace raygrid::common
