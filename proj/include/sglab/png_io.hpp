#pragma once

#include <filesystem>

#include "sglab/raster.hpp"

namespace sglab {

void write_png(const Image& image, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

}  // namespace sglab
