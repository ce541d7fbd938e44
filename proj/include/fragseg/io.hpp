#pragma once

#include <filesystem>

#include "fragseg/image.hpp"

namespace fragseg::io {

// PNG and TIFF; 16-bit samples keep their high byte.
RasterGray8 read_gray8(const std::filesystem::path& path);
RasterRGB read_rgb(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RasterGray8& img);
void write_png(const std::filesystem::path& path, const Mask& mask);
void write_png(const std::filesystem::path& path, const RasterRGB& img);
/// RGB plus alpha plane.
void write_png(const std::filesystem::path& path, const RasterRGB& img, const RasterGray8& alpha);

}  // namespace fragseg::io
