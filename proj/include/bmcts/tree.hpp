#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "bmcts/belief.hpp"
#include "bmcts/extremum.hpp"
#include "bmcts/seeding.hpp"

namespace bmcts {

enum class NodeKind : std::uint8_t { Max, Min, Leaf };

const char* to_string(NodeKind kind) noexcept;

using NodeId = std::uint32_t;
inline constexpr NodeId kRoot = 0;
inline constexpr NodeId kNoParent = static_cast<NodeId>(-1);

/// Nested description of a tree used to build a BanditTree. Interior
/// entries ignore `payoff`; entries without children are leaf arms.
struct TreeShape {
    double payoff = 0.5;
    std::vector<TreeShape> children;

    static TreeShape leaf(double p) { return TreeShape{p, {}}; }
    static TreeShape node(std::vector<TreeShape> kids) { return TreeShape{0.0, std::move(kids)}; }
};

/// Which belief representations a tree maintains and how Gaussian children
/// are combined. Gaussian beliefs are always kept.
struct BeliefOptions {
    bool numeric = false;
    std::size_t grid_points = kDefaultGridPoints;
    CombinerKind combiner = CombinerKind::RandomOrder;
    double rho = 0.0;
    /// nullptr evaluates Phi, F1 and F2 exactly.
    const LookupTables* tables = &default_tables();
};

struct Node {
    NodeKind kind;
    NodeId parent;
    std::uint32_t depth;  // root is 1
    std::uint32_t first_child;
    std::uint32_t num_children;
    double payoff;  // leaves only
};

struct NodeStats {
    std::uint64_t n = 0;
    double reward_sum = 0.0;
    BetaPosterior posterior;  // leaves only
    GaussianBelief gaussian;
    // Numeric backend only; empty otherwise.
    std::vector<double> grid_pdf;
    std::vector<double> grid_cdf;
    Moments grid_moments;

    double mean_reward() const noexcept {
        return n > 0 ? reward_sum / static_cast<double>(n) : 0.0;
    }
};

/// Static MAX/MIN bandit tree with per-node trial statistics and cached
/// beliefs. Node ids are dense and assigned breadth-first, so the children
/// of a node occupy consecutive ids.
class BanditTree {
public:
    explicit BanditTree(const TreeShape& shape, BeliefOptions options = {});

    std::size_t size() const noexcept { return nodes_.size(); }
    const Node& node(NodeId id) const { return nodes_.at(id); }
    const NodeStats& stats(NodeId id) const { return stats_.at(id); }
    NodeStats& stats(NodeId id) { return stats_.at(id); }
    std::span<const NodeId> children(NodeId id) const;
    bool is_leaf(NodeId id) const { return node(id).kind == NodeKind::Leaf; }
    const std::vector<NodeId>& leaves() const noexcept { return leaves_; }
    std::uint32_t height() const noexcept { return height_; }

    const BeliefOptions& belief_options() const noexcept { return options_; }
    const GridAxis* grid_axis() const noexcept { return axis_.get(); }

    /// Recomputes the belief of `id` from its posterior (leaf) or from its
    /// children's cached beliefs (interior).
    void refresh_belief(NodeId id);

    /// Full bottom-up recomputation of every cached belief.
    void recompute_beliefs();

    /// Clears trial statistics and restores prior beliefs.
    void reset();

private:
    void refresh_gaussian(NodeId id);
    void refresh_grid(NodeId id);

    std::vector<Node> nodes_;
    std::vector<NodeId> child_ids_;
    std::vector<NodeStats> stats_;
    std::vector<NodeId> leaves_;
    std::uint32_t height_ = 0;
    BeliefOptions options_;
    std::shared_ptr<const GridAxis> axis_;
    std::vector<GaussianBelief> gaussian_scratch_;
    std::vector<double> grid_scratch_;
};

/// Minimax value of every node under the true leaf payoff rates.
std::vector<double> true_minimax_values(const BanditTree& tree);

/// Bernoulli draw from a leaf's payoff rate. Throws for interior nodes.
int sample_leaf(const BanditTree& tree, NodeId leaf, Rng& rng);

/// Adds one trial outcome to the visit count and reward sum of every node
/// on a root-to-leaf path. Throws std::invalid_argument on malformed paths.
void backprop_uct(BanditTree& tree, std::span<const NodeId> path, int reward);

/// backprop_uct plus a conjugate update of the leaf posterior and a refresh
/// of the beliefs of every node on the path, bottom-up.
void backprop_bayes(BanditTree& tree, std::span<const NodeId> path, int reward);

enum class Backend : std::uint8_t { Gaussian, Numeric };

const char* to_string(Backend backend) noexcept;

/// Inputs to the selection bounds for one node.
struct BoundInputs {
    double mu;
    double sigma;
    std::uint64_t n;
    std::uint64_t parent_n;
    double mean_reward;
};

BoundInputs node_bound_inputs(const BanditTree& tree, NodeId id, Backend backend = Backend::Gaussian);

/// Posterior mean and standard deviation of a node under a backend.
GaussianBelief node_belief(const BanditTree& tree, NodeId id, Backend backend);

/// Deterministic text dump, one node per line:
/// `id kind depth parent p n reward_sum mu sigma`.
void dump_tree(const BanditTree& tree, std::ostream& out);

}  // namespace bmcts
