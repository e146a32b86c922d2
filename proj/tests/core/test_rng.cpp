#include "doctest.h"

#include <atomic>
#include <cmath>
#include <set>
#include <vector>

#include "planloc/parallel.hpp"
#include "planloc/rng.hpp"

using namespace planloc;

TEST_CASE("rng determinism and ranges") {
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    Rng c(43);
    CHECK(Rng(42).uniform() != c.uniform());
}

TEST_CASE("uniform_int is inclusive and covers the range") {
    Rng rng(7);
    std::set<int> seen;
    for (int i = 0; i < 2000; ++i) {
        const int v = rng.uniform_int(2, 5);
        CHECK(v >= 2);
        CHECK(v <= 5);
        seen.insert(v);
    }
    CHECK(seen.size() == 4);
}

TEST_CASE("uniform(lo,hi) stays in range") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-2.0, 3.0);
        CHECK(v >= -2.0);
        CHECK(v < 3.0);
    }
}

TEST_CASE("normal moments are sane") {
    Rng rng(11);
    const int n = 20000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.03);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("sub_seed separates domains and indices") {
    const std::uint64_t master = 1234;
    std::set<std::uint64_t> seeds;
    for (int i = 0; i < 100; ++i) seeds.insert(sub_seed(master, "scene", i));
    for (int i = 0; i < 100; ++i) seeds.insert(sub_seed(master, "query", i));
    CHECK(seeds.size() == 200);
    CHECK(sub_seed(master, "scene", 3) == sub_seed(master, "scene", 3));
    CHECK(sub_seed(master, "scene", 3) != sub_seed(4321, "scene", 3));
}

TEST_CASE("parallel_for covers every index exactly once, any job count") {
    for (int jobs : {1, 2, 7}) {
        std::vector<std::atomic<int>> counts(257);
        for (auto& c : counts) c = 0;
        parallel_for(counts.size(), jobs, [&](std::size_t i) { counts[i]++; });
        for (auto& c : counts) CHECK(c.load() == 1);
    }
}

TEST_CASE("parallel_for result is jobs-independent with slot writes") {
    auto run = [](int jobs) {
        std::vector<double> out(1000);
        parallel_for(out.size(), jobs, [&](std::size_t i) {
            Rng rng(sub_seed(5, "slot", static_cast<int>(i)));
            out[i] = rng.normal() + rng.uniform();
        });
        return out;
    };
    CHECK(run(1) == run(3));
}

TEST_CASE("parallel_for propagates exceptions") {
    CHECK_THROWS_AS(
        parallel_for(16, 4,
                     [&](std::size_t i) {
                         if (i == 7) throw std::runtime_error("boom");
                     }),
        std::runtime_error);
}
