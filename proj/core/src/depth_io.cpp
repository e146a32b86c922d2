#include "planloc/depth_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "planloc/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "depth image IO assumes a little-endian host");

namespace planloc {

namespace {

constexpr char kMagic[4] = {'P', 'D', 'P', 'H'};

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in, const char* what) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw ParseError(std::string("depth file: truncated reading ") + what);
    return v;
}

}  // namespace

void save_depth(const PanoDepth& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, static_cast<std::uint32_t>(img.width));
    write_u32(out, static_cast<std::uint32_t>(img.height));
    std::vector<float> depths(img.depth.begin(), img.depth.end());
    out.write(reinterpret_cast<const char*>(depths.data()),
              static_cast<std::streamsize>(depths.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(img.labels.data()),
              static_cast<std::streamsize>(img.labels.size() * sizeof(std::uint16_t)));
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

PanoDepth load_depth(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    char magic[4] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ParseError("depth file '" + path.string() + "': bad magic (expected PDPH)");
    }
    PanoDepth img;
    img.width = static_cast<int>(read_u32(in, "width"));
    img.height = static_cast<int>(read_u32(in, "height"));
    if (img.width < 1 || img.height < 1) {
        throw ParseError("depth file '" + path.string() + "': invalid dimensions");
    }
    const std::size_t n =
        static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    std::vector<float> depths(n);
    in.read(reinterpret_cast<char*>(depths.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
    img.labels.resize(n);
    in.read(reinterpret_cast<char*>(img.labels.data()),
            static_cast<std::streamsize>(n * sizeof(std::uint16_t)));
    if (!in) throw ParseError("depth file '" + path.string() + "': truncated pixel data");
    img.depth.assign(depths.begin(), depths.end());
    return img;
}

}  // namespace planloc
