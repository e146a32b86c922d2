#pragma once

#include <filesystem>

#include "planloc/render.hpp"

namespace planloc {

// Binary little-endian depth image: header {magic "PDPH", u32 width,
// u32 height}, then width*height float32 depths, then width*height u16 labels.
void save_depth(const PanoDepth& img, const std::filesystem::path& path);
PanoDepth load_depth(const std::filesystem::path& path);

}  // namespace planloc
