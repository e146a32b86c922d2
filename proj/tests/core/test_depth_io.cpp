#include "doctest.h"

#include <fstream>

#include "planloc/depth_io.hpp"
#include "planloc/error.hpp"
#include "planloc/render.hpp"
#include "../support.hpp"

using namespace planloc;
using planloc::testing::ScratchDir;
using planloc::testing::box_room;

TEST_CASE("depth image round trip quantizes to float32 once") {
    ScratchDir dir("depth-io");
    const Scene3D scene = extrude(box_room(4.0, 3.0));
    const PanoDepth img = render_layout_depth(scene, Pose{1.3, 1.1}, 32, 16);
    const auto path = dir.path("img.pdph");
    save_depth(img, path.string());
    const PanoDepth back = load_depth(path.string());
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    REQUIRE(back.depth.size() == img.depth.size());
    for (std::size_t i = 0; i < img.depth.size(); ++i) {
        CHECK(back.depth[i] == static_cast<double>(static_cast<float>(img.depth[i])));
    }
    CHECK(back.labels == img.labels);

    // A second round trip is lossless: quantization happened already.
    const auto path2 = dir.path("img2.pdph");
    save_depth(back, path2.string());
    const PanoDepth back2 = load_depth(path2.string());
    CHECK(back2.depth == back.depth);
    CHECK(back2.labels == back.labels);
}

TEST_CASE("truncated and corrupt depth files are rejected") {
    ScratchDir dir("depth-bad");
    const Scene3D scene = extrude(box_room(4.0, 3.0));
    const PanoDepth img = render_layout_depth(scene, Pose{1.0, 1.0}, 16, 8);
    const auto path = dir.path("img.pdph");
    save_depth(img, path.string());

    // Truncate the file body.
    {
        std::ifstream in(path.string(), std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        std::ofstream out(dir.path("short.pdph").string(), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS((void)load_depth(dir.path("short.pdph").string()), ParseError);

    // Wrong magic.
    {
        std::ofstream out(dir.path("bad.pdph").string(), std::ios::binary);
        out << "NOPE1234567890";
    }
    CHECK_THROWS_AS((void)load_depth(dir.path("bad.pdph").string()), ParseError);
    CHECK_THROWS_AS((void)load_depth(dir.path("absent.pdph").string()), Error);
}
