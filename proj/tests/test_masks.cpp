#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "made/masks.hpp"
#include "oracles.hpp"

using namespace made;

namespace {

bool same_maskset(const MaskSet& a, const MaskSet& b) {
    if (a.ordering.m0 != b.ordering.m0) return false;
    if (a.connectivity.m != b.connectivity.m) return false;
    if (a.hidden.size() != b.hidden.size()) return false;
    for (size_t l = 0; l < a.hidden.size(); ++l) {
        if (a.hidden[l] != b.hidden[l]) return false;
    }
    if (a.output != b.output) return false;
    if (a.has_direct() != b.has_direct()) return false;
    if (a.has_direct() && a.direct != b.direct) return false;
    return true;
}

}  // namespace

TEST_SUITE("masks") {

TEST_CASE("natural ordering") {
    CHECK(natural_ordering(3).m0 == std::vector<int>{1, 2, 3});
    CHECK(natural_ordering(1).m0 == std::vector<int>{1});
    CHECK_THROWS_AS(natural_ordering(0), std::invalid_argument);
}

TEST_CASE("sampled ordering is a permutation") {
    Rng rng(7);
    CHECK(sample_ordering(1, rng).m0 == std::vector<int>{1});

    Ordering o = sample_ordering(5, rng);
    std::vector<int> sorted = o.m0;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == natural_ordering(5).m0);

    Rng a(123), b(123);
    CHECK(sample_ordering(20, a).m0 == sample_ordering(20, b).m0);
    CHECK_THROWS_AS(sample_ordering(0, rng), std::invalid_argument);
}

TEST_CASE("constrained ordering puts observed dims first") {
    Rng rng(11);
    const std::vector<int> observed{1, 3, 4};
    Ordering o = sample_ordering_constrained(6, observed, rng);
    std::vector<int> sorted = o.m0;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == natural_ordering(6).m0);
    for (int d : observed) CHECK(o.m0[d] <= 3);
    for (int d : {0, 2, 5}) CHECK(o.m0[d] >= 4);
}

TEST_CASE("connectivity sampling ranges") {
    Rng rng(3);
    Connectivity c = sample_connectivity({10}, 1, 4, rng);
    for (int v : c.m[0]) {
        CHECK(v >= 1);
        CHECK(v <= 3);
    }

    // D=2 leaves a singleton range.
    Connectivity c2 = sample_connectivity({5, 5}, 1, 2, rng);
    for (const auto& layer : c2.m) {
        for (int v : layer) CHECK(v == 1);
    }

    // Chained minimum: layer 2 values stay within [min(layer 1), D-1].
    for (int trial = 0; trial < 50; ++trial) {
        Connectivity c3 = sample_connectivity({2, 6}, 1, 8, rng);
        const int lo = *std::min_element(c3.m[0].begin(), c3.m[0].end());
        for (int v : c3.m[1]) {
            CHECK(v >= lo);
            CHECK(v <= 7);
        }
    }

    CHECK_THROWS_AS(sample_connectivity({4}, 1, 1, rng), std::invalid_argument);
}

TEST_CASE("mask construction matches the defining inequalities") {
    Ordering o = natural_ordering(3);
    Connectivity c;
    c.m = {{1, 2}};

    MaskSet ms = build_masks(o, c, false);
    Eigen::MatrixXd expected_w(2, 3);
    expected_w << 1, 0, 0, 1, 1, 0;
    Eigen::MatrixXd expected_v(3, 2);
    expected_v << 0, 0, 1, 0, 1, 1;
    CHECK(ms.hidden[0] == expected_w);
    CHECK(ms.output == expected_v);
    CHECK_FALSE(ms.has_direct());

    MaskSet with_direct = build_masks(o, c, true);
    Eigen::MatrixXd expected_a(3, 3);
    expected_a << 0, 0, 0, 1, 0, 0, 1, 1, 0;
    CHECK(with_direct.direct == expected_a);
}

TEST_CASE("first conditional has no incoming connections") {
    // Under ordering [3,1,2] dimension 1 (0-based) is first in the product;
    // its output row must be all zeros whatever the connectivity.
    Ordering o;
    o.m0 = {3, 1, 2};
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Connectivity c = sample_connectivity({6, 4}, 1, 3, rng);
        MaskSet ms = build_masks(o, c, true);
        CHECK(ms.output.row(1).isZero());
        CHECK(ms.direct.row(1).isZero());
    }
}

TEST_CASE("build_masks rejects connectivity violating its invariants") {
    Connectivity c;
    c.m = {{1, 4}};  // 4 > D-1 for D=4
    CHECK_THROWS_AS(build_masks(natural_ordering(4), c, false),
                    std::invalid_argument);

    Connectivity mismatched;
    mismatched.m = {{5}};  // sampled against a wider input layer
    CHECK_THROWS_AS(build_masks(natural_ordering(3), mismatched, false),
                    std::invalid_argument);

    Connectivity below_min;
    below_min.m = {{3, 3}, {1}};  // layer-2 value below min of layer 1
    CHECK_THROWS_AS(build_masks(natural_ordering(5), below_min, false),
                    std::invalid_argument);
}

TEST_CASE("connectivity product on the worked example") {
    Connectivity c;
    c.m = {{1, 2}};
    MaskSet ms = build_masks(natural_ordering(3), c, false);
    auto product = connectivity_product(ms);
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> expected(3, 3);
    expected << 0, 0, 0, 1, 0, 0, 2, 1, 0;
    CHECK(product == expected);
}

TEST_CASE("connectivity product of all-zero masks is zero") {
    Connectivity c;
    c.m = {{1, 2}};
    MaskSet ms = build_masks(natural_ordering(3), c, true);
    ms.hidden[0].setZero();
    ms.output.setZero();
    ms.direct.setZero();
    CHECK(connectivity_product(ms).isZero());
}

TEST_CASE("connectivity product equals brute-force path enumeration") {
    Rng rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        const int dims = rng.uniform_int(2, 6);
        const int depth = rng.uniform_int(1, 3);
        std::vector<int> sizes;
        for (int l = 0; l < depth; ++l) sizes.push_back(rng.uniform_int(1, 8));
        const bool direct = rng.uniform_int(0, 1) == 1;

        MaskSet ms = sample_maskset(dims, sizes, direct, rng);
        auto product = connectivity_product(ms);
        CHECK(product == test::count_paths_by_traversal(ms));

        for (int dout = 0; dout < dims; ++dout) {
            for (int din = 0; din < dims; ++din) {
                if (ms.ordering.m0[dout] <= ms.ordering.m0[din]) {
                    CHECK(product(dout, din) == 0);
                }
            }
        }
    }
}

TEST_CASE("verifier accepts construction output and flags corruption") {
    Connectivity c;
    c.m = {{1, 2}};
    MaskSet ms = build_masks(natural_ordering(3), c, false);
    CHECK(verify_autoregressive(ms).pass);

    // Connect output 0 to a unit with m(k) >= its position: forbidden path
    // from input 0 to output 0.
    ms.output(0, 0) = 1.0;
    VerifyReport report = verify_autoregressive(ms);
    CHECK_FALSE(report.pass);
    CHECK(std::find(report.violations.begin(), report.violations.end(),
                    std::make_pair(0, 0)) != report.violations.end());
}

TEST_CASE("full strictly-lower direct mask passes") {
    Connectivity c;
    c.m = {{1, 2, 3}};
    MaskSet ms = build_masks(natural_ordering(4), c, true);
    for (int dout = 0; dout < 4; ++dout) {
        for (int din = 0; din < 4; ++din) {
            CHECK(ms.direct(dout, din) == (dout > din ? 1.0 : 0.0));
        }
    }
    CHECK(verify_autoregressive(ms).pass);
}

TEST_CASE("hidden mask rows have exactly m(k) ones at the smallest positions") {
    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const int dims = rng.uniform_int(2, 10);
        MaskSet ms = sample_maskset(dims, {rng.uniform_int(1, 12)}, false, rng);
        const auto& m1 = ms.connectivity.m[0];
        for (int k = 0; k < static_cast<int>(m1.size()); ++k) {
            CHECK(ms.hidden[0].row(k).sum() == doctest::Approx(m1[k]));
            for (int d = 0; d < dims; ++d) {
                CHECK(ms.hidden[0](k, d) ==
                      (ms.ordering.m0[d] <= m1[k] ? 1.0 : 0.0));
            }
        }
    }
}

TEST_CASE("mask lists are reproducible and verified") {
    auto list = make_mask_list(8, 5, {7, 3}, 42, true);
    REQUIRE(list.size() == 8);
    for (const auto& ms : list) {
        CHECK(verify_autoregressive(ms).pass);
        CHECK(ms.seed.valid);
        CHECK(ms.seed.master == 42);
    }

    auto again = make_mask_list(8, 5, {7, 3}, 42, true);
    for (size_t i = 0; i < list.size(); ++i) {
        CHECK(same_maskset(list[i], again[i]));
        CHECK(same_maskset(list[i],
                           mask_list_entry(42, i, 5, {7, 3}, true)));
    }

    auto other = make_mask_list(32, 6, {4}, 1, false);
    auto other2 = make_mask_list(32, 6, {4}, 2, false);
    bool any_diff = false;
    for (size_t i = 0; i < other.size(); ++i) {
        if (other[i].ordering.m0 != other2[i].ordering.m0) any_diff = true;
    }
    CHECK(any_diff);

    CHECK_THROWS_AS(make_mask_list(0, 3, {2}, 0, false), std::invalid_argument);
}

TEST_CASE("mask dump round-trips") {
    Rng rng(4);
    MaskSet ms = sample_maskset(5, {4, 3}, true, rng);
    std::stringstream buf;
    dump_masks(ms, buf);

    MaskSet parsed = parse_mask_dump(buf);
    CHECK(parsed.ordering.m0 == ms.ordering.m0);
    REQUIRE(parsed.hidden.size() == ms.hidden.size());
    for (size_t l = 0; l < ms.hidden.size(); ++l) {
        CHECK(parsed.hidden[l] == ms.hidden[l]);
    }
    CHECK(parsed.output == ms.output);
    CHECK(parsed.direct == ms.direct);
    CHECK(verify_autoregressive(parsed).pass);
}

}  // TEST_SUITE
