#include "doctest.h"

#include <fstream>

#include "planloc/embed.hpp"
#include "planloc/embed_io.hpp"
#include "planloc/error.hpp"
#include "../support.hpp"

using namespace planloc;
using planloc::testing::ScratchDir;

TEST_CASE("params round trip through disk") {
    ScratchDir dir("embed-io");
    for (Branch branch : {Branch::Layout, Branch::Query}) {
        const EncoderParams params = init_params(branch, 11);
        const auto path = dir.path(to_string(branch) + ".lllc");
        save_params(params, path);
        const EncoderParams back = load_params(path);
        CHECK(back.branch == params.branch);
        CHECK(back.has_decoder() == params.has_decoder());
        REQUIRE(back.weights.rows() == params.weights.rows());
        REQUIRE(back.weights.cols() == params.weights.cols());
        // Storage is float32; one quantization, then exact.
        for (int r = 0; r < params.weights.rows(); ++r) {
            for (int c = 0; c < params.weights.cols(); ++c) {
                CHECK(back.weights(r, c) ==
                      static_cast<double>(static_cast<float>(params.weights(r, c))));
            }
        }

        const auto path2 = dir.path(to_string(branch) + "-2.lllc");
        save_params(back, path2);
        std::ifstream f1(path, std::ios::binary);
        std::ifstream f2(path2, std::ios::binary);
        const std::string s1((std::istreambuf_iterator<char>(f1)), {});
        const std::string s2((std::istreambuf_iterator<char>(f2)), {});
        CHECK(s1 == s2);
        CHECK(!s1.empty());
    }
}

TEST_CASE("loaded params still encode") {
    ScratchDir dir("embed-io-use");
    const EncoderParams params = init_params(Branch::Layout, 4);
    const auto path = dir.path("layout.lllc");
    save_params(params, path);
    const EncoderParams back = load_params(path);
    CHECK_NOTHROW(validate(back));
    CHECK(back.has_decoder());
}

TEST_CASE("corrupt params files are rejected") {
    ScratchDir dir("embed-bad");
    const EncoderParams params = init_params(Branch::Layout, 2);
    const auto path = dir.path("p.lllc");
    save_params(params, path);

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});

    {
        std::ofstream out(dir.path("magic.lllc"), std::ios::binary);
        std::string bad = bytes;
        bad[0] = 'X';
        out.write(bad.data(), static_cast<std::streamsize>(bad.size()));
    }
    CHECK_THROWS_AS((void)load_params(dir.path("magic.lllc")), ParseError);

    {
        std::ofstream out(dir.path("short.lllc"), std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 100));
    }
    CHECK_THROWS_AS((void)load_params(dir.path("short.lllc")), ParseError);

    CHECK_THROWS_AS((void)load_params(dir.path("absent.lllc")), Error);
}

TEST_CASE("layout params without a decoder block fail validation") {
    ScratchDir dir("embed-nodec");
    // Write a query-branch file, then flip the branch tag to layout: the
    // decoder block is now missing.
    const EncoderParams params = init_params(Branch::Query, 3);
    const auto path = dir.path("q.lllc");
    save_params(params, path);
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(4);  // branch field sits right after the magic
    const std::uint32_t layout_tag = 0;
    f.write(reinterpret_cast<const char*>(&layout_tag), sizeof(layout_tag));
    f.close();
    CHECK_THROWS_AS((void)load_params(path), ParseError);
}
