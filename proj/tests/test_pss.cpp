#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "scramble/pss.hpp"

using namespace scramble;

TEST_CASE("samples are distinct, exclude the requester and the exclude set") {
    SamplerView view(5);
    Rng rng(1);
    const std::vector<NodeId> exclude = {1, 2};
    for (int trial = 0; trial < 200; ++trial) {
        auto picked = view.sample_responsive(0, exclude, 2, rng);
        REQUIRE(picked.size() == 2);
        CHECK(picked[0] != picked[1]);
        for (NodeId w : picked) {
            CHECK(w != 0);
            CHECK(std::find(exclude.begin(), exclude.end(), w) == exclude.end());
            CHECK(w < 5);
        }
    }
}

TEST_CASE("exhaustion returns a short list") {
    SamplerView view(2);
    Rng rng(1);
    const std::vector<NodeId> exclude = {1};
    CHECK(view.sample_responsive(0, exclude, 1, rng).empty());
}

TEST_CASE("sampling over the whole population is uniform within 5 sigma") {
    const std::uint32_t n = 100;
    const int draws = 100000;
    SamplerView view(n);
    Rng rng(12345);
    std::vector<int> hits(n, 0);
    for (int i = 0; i < draws; ++i) {
        auto picked = view.sample_responsive(0, {}, 1, rng);
        REQUIRE(picked.size() == 1);
        ++hits[picked[0]];
    }
    CHECK(hits[0] == 0);
    const double p = 1.0 / (n - 1);
    const double expect = draws * p;
    const double sigma = std::sqrt(draws * p * (1.0 - p));
    for (NodeId w = 1; w < n; ++w) {
        CHECK(std::abs(hits[w] - expect) <= 5.0 * sigma);
    }
}

TEST_CASE("nodes at the inbound cap are not responsive") {
    SamplerView view(4, 1);
    view.note_link_added(2);
    CHECK_FALSE(view.responsive(2));
    CHECK(view.responsive(3));

    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto picked = view.sample_responsive(0, {}, 3, rng);
        REQUIRE(picked.size() == 2);  // only 1 and 3 remain
        CHECK(std::find(picked.begin(), picked.end(), 2) == picked.end());
    }
    view.note_link_removed(2);
    CHECK(view.responsive(2));
    auto picked = view.sample_responsive(0, {}, 3, rng);
    CHECK(picked.size() == 3);
}

TEST_CASE("exhaustion path still returns everything eligible exactly once") {
    SamplerView view(30);
    Rng rng(9);
    std::vector<NodeId> exclude;
    for (NodeId w = 1; w < 20; ++w) exclude.push_back(w);
    auto picked = view.sample_responsive(0, exclude, 25, rng);
    std::sort(picked.begin(), picked.end());
    std::vector<NodeId> expect;
    for (NodeId w = 20; w < 30; ++w) expect.push_back(w);
    CHECK(picked == expect);
}
