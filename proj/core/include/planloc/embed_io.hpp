#pragma once

#include <filesystem>

#include "planloc/embed.hpp"

namespace planloc {

// Binary little-endian params file: header {magic "LLLC", u32 branch,
// u32 in_dim, u32 out_dim}, float32 weights row-major, float32 bias, then an
// optional decoder block {u32 in_dim, u32 out_dim, weights, bias} on the
// layout branch.
void save_params(const EncoderParams& params, const std::filesystem::path& path);
EncoderParams load_params(const std::filesystem::path& path);

}  // namespace planloc
