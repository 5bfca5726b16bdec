#include <doctest.h>

#include <sstream>
#include <vector>

#include "bmcts/tree.hpp"
#include "oracles.hpp"

using namespace bmcts;
using doctest::Approx;
using S = TreeShape;

namespace {

S two_by_two() {
    return S::node({S::node({S::leaf(0.9), S::leaf(0.1)}), S::node({S::leaf(0.6), S::leaf(0.5)})});
}

std::vector<NodeId> leftmost_path(const BanditTree& t) {
    std::vector<NodeId> path{kRoot};
    while (!t.is_leaf(path.back())) path.push_back(t.children(path.back()).front());
    return path;
}

S random_shape(Rng& rng, oracle::Tree& mirror, int depth_left) {
    const bool leaf = depth_left == 0 || (depth_left < 4 && uniform_open01(rng) < 0.2);
    if (leaf) {
        mirror.p = uniform_open01(rng);
        return S::leaf(mirror.p);
    }
    const auto width = 1 + uniform_index(rng, 5);
    S node;
    mirror.kids.resize(width);
    for (std::uint64_t i = 0; i < width; ++i) {
        node.children.push_back(random_shape(rng, mirror.kids[i], depth_left - 1));
    }
    return node;
}

}  // namespace

TEST_CASE("breadth-first layout and alternating kinds") {
    const BanditTree t(two_by_two());
    REQUIRE(t.size() == 7);
    CHECK(t.node(0).kind == NodeKind::Max);
    CHECK(t.node(1).kind == NodeKind::Min);
    CHECK(t.node(2).kind == NodeKind::Min);
    for (NodeId id = 3; id < 7; ++id) CHECK(t.node(id).kind == NodeKind::Leaf);
    CHECK(std::vector<NodeId>(t.children(0).begin(), t.children(0).end()) == std::vector<NodeId>{1, 2});
    CHECK(std::vector<NodeId>(t.children(2).begin(), t.children(2).end()) == std::vector<NodeId>{5, 6});
    CHECK(t.node(5).parent == 2);
    CHECK(t.leaves() == std::vector<NodeId>{3, 4, 5, 6});
    CHECK(t.children(3).empty());
    CHECK(t.height() == 3);
}

TEST_CASE("construction errors") {
    CHECK_THROWS_AS(BanditTree(S::leaf(0.5)), std::invalid_argument);
    CHECK_THROWS_AS(BanditTree(S::node({S::leaf(1.5)})), std::invalid_argument);
}

TEST_CASE("true minimax values") {
    const BanditTree single(S::node({S::leaf(0.7)}));
    CHECK(true_minimax_values(single)[kRoot] == 0.7);

    const auto v = true_minimax_values(BanditTree(two_by_two()));
    CHECK(v[1] == 0.1);
    CHECK(v[2] == 0.5);
    CHECK(v[0] == 0.5);
}

TEST_CASE("true minimax values match brute force on random trees") {
    Rng rng(2024);
    for (int rep = 0; rep < 100; ++rep) {
        oracle::Tree mirror;
        S shape = random_shape(rng, mirror, 4);
        if (shape.children.empty()) {
            shape = S::node({shape});
            mirror = oracle::Tree{0.0, {mirror}};
        }
        const BanditTree t(shape);
        CHECK(true_minimax_values(t)[kRoot] == oracle::minimax(mirror, true));
    }
}

TEST_CASE("leaf sampling") {
    const BanditTree t(S::node({S::leaf(1.0), S::leaf(0.0), S::leaf(0.5)}));
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(sample_leaf(t, 1, rng) == 1);
        REQUIRE(sample_leaf(t, 2, rng) == 0);
    }
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) sum += sample_leaf(t, 3, rng);
    CHECK(std::abs(sum / 100000.0 - 0.5) < 0.01);
    CHECK_THROWS_AS(sample_leaf(t, kRoot, rng), std::invalid_argument);
}

TEST_CASE("UCT back-propagation") {
    BanditTree t(two_by_two());
    const std::vector<NodeId> path{0, 1, 3};
    backprop_uct(t, path, 1);
    for (NodeId id : path) {
        CHECK(t.stats(id).n == 1);
        CHECK(t.stats(id).mean_reward() == 1.0);
    }
    backprop_uct(t, path, 0);
    for (NodeId id : path) CHECK(t.stats(id).mean_reward() == 0.5);
    for (NodeId id : {2u, 4u, 5u, 6u}) {
        CHECK(t.stats(id).n == 0);
        CHECK(t.stats(id).reward_sum == 0.0);
    }
}

TEST_CASE("malformed paths are rejected") {
    BanditTree t(two_by_two());
    const std::vector<std::vector<NodeId>> bad{{}, {1, 3}, {0, 2, 3}, {0, 1}, {0, 1, 3, 4}, {0, 9, 3}};
    for (const auto& p : bad) {
        CHECK_THROWS_AS(backprop_uct(t, p, 1), std::invalid_argument);
        CHECK_THROWS_AS(backprop_bayes(t, p, 1), std::invalid_argument);
    }
    for (NodeId id = 0; id < t.size(); ++id) CHECK(t.stats(id).n == 0);
}

TEST_CASE("Bayesian back-propagation") {
    SUBCASE("single leaf") {
        BanditTree t(S::node({S::leaf(0.7)}));
        const std::vector<NodeId> path{0, 1};
        backprop_bayes(t, path, 1);
        CHECK(t.stats(1).posterior == BetaPosterior{2, 1});
        CHECK(t.stats(0).gaussian.mu == Approx(2.0 / 3.0));
        CHECK(t.stats(0).n == 1);
        CHECK(t.stats(0).mean_reward() == 1.0);
    }
    SUBCASE("two uniform leaves under MAX, numeric backend") {
        BeliefOptions opts;
        opts.numeric = true;
        const BanditTree t(S::node({S::leaf(0.3), S::leaf(0.6)}), opts);
        CHECK(std::abs(t.stats(0).grid_moments.mean - 2.0 / 3.0) < 1e-3);
    }
    SUBCASE("off-path beliefs are untouched") {
        BeliefOptions opts;
        opts.numeric = true;
        BanditTree t(two_by_two(), opts);
        const NodeStats before = t.stats(2);
        const NodeStats leaf_before = t.stats(5);
        backprop_bayes(t, std::vector<NodeId>{0, 1, 3}, 1);
        CHECK(t.stats(2).gaussian == before.gaussian);
        CHECK(t.stats(2).grid_pdf == before.grid_pdf);
        CHECK(t.stats(5).gaussian == leaf_before.gaussian);
        CHECK(t.stats(5).grid_pdf == leaf_before.grid_pdf);
    }
}

TEST_CASE("bound inputs") {
    BanditTree t(two_by_two());
    const BoundInputs fresh = node_bound_inputs(t, 3);
    CHECK(fresh.mu == 0.5);
    CHECK(fresh.sigma == Approx(0.28868).epsilon(1e-5));
    CHECK(fresh.n == 0);

    backprop_uct(t, std::vector<NodeId>{0, 1, 3}, 1);
    const BoundInputs after = node_bound_inputs(t, 1);
    CHECK(after.n == 1);
    CHECK(after.mean_reward == 1.0);
    CHECK(after.parent_n == t.stats(0).n);
    CHECK_THROWS_AS(node_bound_inputs(t, 1, Backend::Numeric), std::logic_error);
}

TEST_CASE("count conservation, cache coherence and leaf backend agreement") {
    BeliefOptions opts;
    opts.numeric = true;
    opts.grid_points = 400;
    const S shape = S::node({S::node({S::leaf(0.2), S::leaf(0.8), S::leaf(0.5)}),
                             S::node({S::leaf(0.6), S::leaf(0.4)}),
                             S::node({S::node({S::leaf(0.9)}), S::leaf(0.1)})});
    for (const CombinerKind combiner : {CombinerKind::RandomOrder, CombinerKind::MinError}) {
        opts.combiner = combiner;
        BanditTree t(shape, opts);
        Rng rng(31);
        for (int trial = 0; trial < 300; ++trial) {
            std::vector<NodeId> path{kRoot};
            while (!t.is_leaf(path.back())) {
                const auto kids = t.children(path.back());
                path.push_back(kids[uniform_index(rng, kids.size())]);
            }
            backprop_bayes(t, path, sample_leaf(t, path.back(), rng));
        }
        for (NodeId id = 0; id < t.size(); ++id) {
            if (t.is_leaf(id)) {
                const Moments g = t.stats(id).grid_moments;
                const GaussianBelief b = t.stats(id).gaussian;
                CHECK(std::abs(g.mean - b.mu) < 1e-4);
                CHECK(std::abs(g.variance - b.sigma * b.sigma) < 1e-4);
                continue;
            }
            std::uint64_t sum = 0;
            for (NodeId c : t.children(id)) sum += t.stats(c).n;
            CHECK(t.stats(id).n == sum);
        }
        BanditTree fresh = t;
        fresh.recompute_beliefs();
        for (NodeId id = 0; id < t.size(); ++id) {
            CHECK(fresh.stats(id).gaussian == t.stats(id).gaussian);
            CHECK(fresh.stats(id).grid_pdf == t.stats(id).grid_pdf);
        }
    }
}

TEST_CASE("debug dump") {
    BanditTree t(S::node({S::leaf(0.25)}));
    backprop_bayes(t, leftmost_path(t), 1);
    std::ostringstream out;
    dump_tree(t, out);
    CHECK(out.str() ==
          "0 MAX 1 -1 0 1 1 0.666667 0.235702\n"
          "1 LEAF 2 0 0.25 1 1 0.666667 0.235702\n");
}
