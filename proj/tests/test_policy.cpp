#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "bmcts/experiments.hpp"
#include "bmcts/policy.hpp"

using namespace bmcts;
using doctest::Approx;
using S = TreeShape;

namespace {

S flat_root(std::size_t width, double p = 0.5) {
    S root;
    for (std::size_t i = 0; i < width; ++i) root.children.push_back(S::leaf(p));
    return root;
}

void set_stats(BanditTree& t, NodeId id, std::uint64_t n, double reward_sum) {
    t.stats(id).n = n;
    t.stats(id).reward_sum = reward_sum;
}

}  // namespace

TEST_CASE("UCB1 bound") {
    CHECK(ucb1_bound(0.5, 10, 100) == Approx(1.4597051824).epsilon(1e-10));
    CHECK(ucb1_bound(0.5, 0, 100) == kInfiniteBound);
    CHECK(ucb1_bound(0.42, 1, 1) == 0.42);
}

TEST_CASE("Bayes-UCT1 bound") {
    CHECK(bayes_uct1_bound(0.6, 10, 100) == Approx(1.5597051824).epsilon(1e-10));
    CHECK(bayes_uct1_bound(0.6, 0, 100) == kInfiniteBound);
    CHECK(bayes_uct1_bound(0.6, 1, 1) == 0.6);
}

TEST_CASE("Bayes-UCT2 bound") {
    CHECK(bayes_uct2_bound(0.5, 0.2887, 100) == Approx(1.3761624245).epsilon(1e-10));
    CHECK(bayes_uct2_bound(0.5, 0.2887, 1) == 0.5);
    CHECK(bayes_uct2_bound(0.5, 0.2887, 0) == 0.5);
    CHECK(bayes_uct2_bound(0.37, 0.0, 123456) == 0.37);
}

TEST_CASE("policy names round-trip") {
    for (const char* name : {"uct", "bayes1", "bayes2", "random", "hybrid"}) {
        const auto p = parse_policy(name, Backend::Gaussian);
        REQUIRE(p);
        CHECK(policy_name(p->kind) == name);
    }
    CHECK(parse_policy("bayes2n", Backend::Gaussian)->backend == Backend::Numeric);
    CHECK(parse_policy("bayes1g", Backend::Numeric)->backend == Backend::Gaussian);
    CHECK_FALSE(parse_policy("uctg", Backend::Gaussian));
    CHECK_FALSE(parse_policy("bayes3", Backend::Gaussian));
    CHECK(policy_label({PolicyKind::BayesUct2, Backend::Gaussian}) == "bayes2g");
}

TEST_CASE("fresh node under UCT picks children uniformly") {
    const BanditTree t(flat_root(5));
    Rng rng(4);
    std::array<int, 5> counts{};
    for (int i = 0; i < 10000; ++i) ++counts[select_child(t, kRoot, Policy{PolicyKind::Uct}, rng) - 1];
    for (int c : counts) CHECK(std::abs(c / 10000.0 - 0.2) < 0.03);
}

TEST_CASE("strict argmax and mirrored MIN selection") {
    BanditTree t(flat_root(2));
    Rng rng(0);
    set_stats(t, 0, 20, 10);
    set_stats(t, 1, 10, 9);  // r-bar 0.9
    set_stats(t, 2, 10, 4);  // r-bar 0.4
    CHECK(select_child(t, kRoot, Policy{PolicyKind::Uct}, rng) == 1);

    // The MIN player prefers the child with the lower value.
    BanditTree m(S::node({S::node({S::leaf(0.5), S::leaf(0.5)})}));
    set_stats(m, 1, 20, 10);
    set_stats(m, 2, 10, 9);
    set_stats(m, 3, 10, 4);
    CHECK(select_child(m, 1, Policy{PolicyKind::Uct}, rng) == 3);
}

TEST_CASE("uniform random policy ignores statistics") {
    BanditTree t(flat_root(4));
    set_stats(t, 1, 1000, 1000);
    Rng rng(6);
    std::array<int, 4> counts{};
    for (int i = 0; i < 20000; ++i) {
        ++counts[select_child(t, kRoot, Policy{PolicyKind::UniformRandom}, rng) - 1];
    }
    for (int c : counts) CHECK(std::abs(c / 20000.0 - 0.25) < 0.02);
}

TEST_CASE("selection rejects leaves") {
    const BanditTree t(flat_root(2));
    Rng rng(0);
    CHECK_THROWS_AS(select_child(t, 1, Policy{PolicyKind::Uct}, rng), std::invalid_argument);
}

TEST_CASE("argmax is invariant to a common shift of the value term") {
    Rng rng(77);
    for (int rep = 0; rep < 500; ++rep) {
        const std::uint64_t parent_n = 10 + uniform_index(rng, 1000);
        std::vector<double> means(6);
        std::vector<std::uint64_t> ns(6);
        for (std::size_t i = 0; i < 6; ++i) {
            means[i] = uniform_open01(rng);
            ns[i] = 1 + uniform_index(rng, parent_n / 6);
        }
        const double shift = uniform_open01(rng) - 0.5;
        auto argmax = [&](double c) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < 6; ++i) {
                if (ucb1_bound(means[i] + c, ns[i], parent_n) > ucb1_bound(means[best] + c, ns[best], parent_n)) {
                    best = i;
                }
            }
            return best;
        };
        CHECK(argmax(0.0) == argmax(shift));
    }
}

TEST_CASE("unvisited children are selected first under UCT and Bayes-UCT1") {
    TreeSpec spec;
    spec.depth = 2;
    spec.width = 6;
    for (const PolicyKind kind : {PolicyKind::Uct, PolicyKind::BayesUct1}) {
        BanditTree t = generate_tree(spec, 3);
        Rng rng(12);
        const Policy policy{kind};
        for (int trial = 0; trial < 200; ++trial) {
            NodeId node = kRoot;
            while (!t.is_leaf(node)) {
                bool has_unvisited = false;
                for (NodeId c : t.children(node)) has_unvisited |= t.stats(c).n == 0;
                const NodeId pick = select_child(t, node, policy, rng);
                if (has_unvisited) REQUIRE(t.stats(pick).n == 0);
                node = pick;
            }
            run_trial(t, policy, rng);
        }
    }
}

TEST_CASE("run_trial") {
    SUBCASE("single-leaf tree") {
        BanditTree t(S::node({S::leaf(1.0)}));
        Rng rng(0);
        const TrialRecord r = run_trial(t, Policy{PolicyKind::BayesUct2}, rng);
        CHECK(r.path == std::vector<NodeId>{0, 1});
        CHECK(r.reward == 1);
        CHECK(t.stats(1).posterior == BetaPosterior{2, 1});
    }
    SUBCASE("root count equals trial count") {
        TreeSpec spec;
        BanditTree t = generate_tree(spec, 1);
        Rng rng(1);
        for (int i = 0; i < 777; ++i) run_trial(t, Policy{PolicyKind::BayesUct2}, rng);
        CHECK(t.stats(kRoot).n == 777);
    }
    SUBCASE("uniform random sampling reaches every leaf") {
        TreeSpec spec;
        BanditTree t = generate_tree(spec, 2);
        Rng rng(2);
        for (int i = 0; i < 25000; ++i) run_trial(t, Policy{PolicyKind::UniformRandom}, rng);
        for (NodeId leaf : t.leaves()) CHECK(t.stats(leaf).n >= 1);
    }
    SUBCASE("UCT leaves beliefs at the prior") {
        BanditTree t(flat_root(3));
        Rng rng(3);
        for (int i = 0; i < 50; ++i) run_trial(t, Policy{PolicyKind::Uct}, rng);
        CHECK(t.stats(1).posterior == beta_uniform_prior());
        run_trial(t, Policy{PolicyKind::Uct}, rng, TrialOptions{.force_beliefs = true});
        CHECK(t.stats(kRoot).n == 51);
    }
}

TEST_CASE("greedy root choice") {
    BanditTree single(flat_root(1));
    CHECK(greedy_root_choice(single, Policy{PolicyKind::Uct}) == 1);

    BanditTree t(flat_root(2));
    set_stats(t, 1, 10, 3);
    set_stats(t, 2, 10, 7);
    CHECK(greedy_root_choice(t, Policy{PolicyKind::Uct}) == 2);

    // Beliefs say the opposite of r-bar; HYBRID answers with beliefs.
    t.stats(1).gaussian = {0.8, 0.1};
    t.stats(2).gaussian = {0.6, 0.1};
    CHECK(greedy_root_choice(t, Policy{PolicyKind::Hybrid}) == 1);
    CHECK(greedy_root_choice(t, Policy{PolicyKind::BayesUct2}) == 1);

    SUBCASE("unvisited children never win under UCT unless all are unvisited") {
        BanditTree u(flat_root(3));
        CHECK(greedy_root_choice(u, Policy{PolicyKind::Uct}) == 1);
        set_stats(u, 3, 5, 0);
        CHECK(greedy_root_choice(u, Policy{PolicyKind::Uct}) == 3);
    }
    SUBCASE("ties go to the lowest id") {
        BanditTree u(flat_root(3));
        CHECK(greedy_root_choice(u, Policy{PolicyKind::BayesUct2}) == 1);
    }
}

TEST_CASE("hybrid follows UCT's trial paths exactly") {
    TreeSpec spec;
    spec.width = 4;
    BanditTree a = generate_tree(spec, 9);
    BanditTree b = generate_tree(spec, 9);
    Rng ra(5), rb(5);
    bool answers_differ = false;
    for (int i = 0; i < 2000; ++i) {
        const TrialRecord x = run_trial(a, Policy{PolicyKind::Uct}, ra);
        const TrialRecord y = run_trial(b, Policy{PolicyKind::Hybrid}, rb);
        REQUIRE(x.path == y.path);
        REQUIRE(x.reward == y.reward);
        answers_differ |= greedy_root_choice(a, Policy{PolicyKind::Uct}) !=
                          greedy_root_choice(b, Policy{PolicyKind::Hybrid});
    }
    CHECK(answers_differ);
}

TEST_CASE("on- and off-policy convergence on a separated tree (short runs)") {
    ConvergenceConfig on;
    on.shape = separated_test_shape();
    on.policy = {PolicyKind::BayesUct2, Backend::Gaussian};
    on.trials = 50000;
    on.runs = 10;
    on.master_seed = 1;
    const auto a = convergence_study(on);
    CHECK(a.true_value == 0.3);
    CHECK(a.passed() >= 9);

    ConvergenceConfig off = on;
    off.policy = {PolicyKind::UniformRandom, Backend::Numeric};
    off.runs = 5;
    const auto b = convergence_study(off);
    CHECK(b.passed() >= 4);
}
