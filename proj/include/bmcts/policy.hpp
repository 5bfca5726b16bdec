#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bmcts/seeding.hpp"
#include "bmcts/tree.hpp"

namespace bmcts {

enum class PolicyKind : std::uint8_t { Uct, BayesUct1, BayesUct2, UniformRandom, Hybrid };

/// A sampling/answering policy. `backend` selects which beliefs the
/// Bayesian variants read; UCT ignores it.
struct Policy {
    PolicyKind kind = PolicyKind::Uct;
    Backend backend = Backend::Gaussian;

    /// Whether trials must keep beliefs current.
    bool needs_beliefs() const noexcept { return kind != PolicyKind::Uct; }
    /// Whether selection reads beliefs (as opposed to counts or nothing).
    bool samples_with_beliefs() const noexcept {
        return kind == PolicyKind::BayesUct1 || kind == PolicyKind::BayesUct2;
    }
    /// Whether the greedy answer uses posterior means.
    bool answers_with_beliefs() const noexcept { return kind != PolicyKind::Uct; }

    friend bool operator==(const Policy&, const Policy&) = default;
};

/// Short identifier used on the command line and in CSV output
/// ("uct", "bayes1", "bayes2", "random", "hybrid").
std::string_view policy_name(PolicyKind kind) noexcept;
/// Backend column for CSV output; "none" for UCT.
std::string_view backend_name(const Policy& policy) noexcept;
/// Display label, e.g. "bayes2g" or "uct".
std::string policy_label(const Policy& policy);

/// Parses "uct", "bayes1", "bayes2", "random", "hybrid", optionally suffixed
/// with g/n to pin the backend (e.g. "bayes2n").
std::optional<Policy> parse_policy(std::string_view text, Backend default_backend);

inline constexpr double kInfiniteBound = std::numeric_limits<double>::infinity();

/// UCB1: mean + sqrt(2 ln N / n); +inf when n = 0.
double ucb1_bound(double mean_reward, std::uint64_t n, std::uint64_t parent_n) noexcept;

/// Posterior mean with the UCB1 exploration term; +inf when n = 0.
double bayes_uct1_bound(double mu, std::uint64_t n, std::uint64_t parent_n) noexcept;

/// Posterior mean plus sqrt(2 ln N) posterior standard deviations.
double bayes_uct2_bound(double mu, double sigma, std::uint64_t parent_n) noexcept;

/// Bound of `child` from the perspective of the player moving at its
/// parent. MIN parents mirror the value term (1 - v) so that every node
/// maximizes.
double selection_bound(const BanditTree& tree, NodeId child, const Policy& policy);

/// Argmax child of the selection bound, ties broken uniformly with `rng`.
/// Throws std::invalid_argument for leaves.
NodeId select_child(const BanditTree& tree, NodeId node, const Policy& policy, Rng& rng);

struct TrialRecord {
    std::vector<NodeId> path;
    int reward = 0;
};

struct TrialOptions {
    /// Keep beliefs current even when the policy does not need them.
    bool force_beliefs = false;
    /// Skip belief refreshes and only update counts and posteriors. Valid for
    /// policies that do not sample with beliefs; call
    /// BanditTree::recompute_beliefs() before reading beliefs.
    bool defer_beliefs = false;
};

/// One root-to-leaf descent, a Bernoulli draw at the leaf and the
/// back-propagation the policy needs. `record` is reused between calls.
void run_trial(BanditTree& tree, const Policy& policy, Rng& rng, TrialRecord& record,
               TrialOptions options = {});
TrialRecord run_trial(BanditTree& tree, const Policy& policy, Rng& rng, TrialOptions options = {});

/// Root child with the highest estimated mean: r-bar for UCT (unvisited
/// children rank last), posterior mean otherwise. Ties go to the lowest id.
NodeId greedy_root_choice(const BanditTree& tree, const Policy& policy);

}  // namespace bmcts
