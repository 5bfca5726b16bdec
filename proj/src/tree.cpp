#include "bmcts/tree.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <ostream>
#include <stdexcept>
#include <string>

namespace bmcts {

const char* to_string(NodeKind kind) noexcept {
    switch (kind) {
        case NodeKind::Max: return "MAX";
        case NodeKind::Min: return "MIN";
        case NodeKind::Leaf: return "LEAF";
    }
    return "?";
}

const char* to_string(Backend backend) noexcept {
    return backend == Backend::Numeric ? "numeric" : "gaussian";
}

namespace {

constexpr std::uint64_t kCombinerSalt = 0x636f6d62696e6572ULL;

}  // namespace

BanditTree::BanditTree(const TreeShape& shape, BeliefOptions options) : options_(options) {
    if (shape.children.empty()) {
        throw std::invalid_argument("tree root must have at least one child");
    }
    if (!(options_.rho >= -1.0 && options_.rho <= 1.0)) {
        throw std::invalid_argument("correlation must lie in [-1, 1]");
    }

    // Breadth-first layout; children of each node get consecutive ids.
    struct Pending {
        const TreeShape* shape;
        NodeId parent;
        std::uint32_t depth;
    };
    std::deque<Pending> queue{{&shape, kNoParent, 1}};
    while (!queue.empty()) {
        const Pending p = queue.front();
        queue.pop_front();
        const auto id = static_cast<NodeId>(nodes_.size());
        Node node{};
        node.parent = p.parent;
        node.depth = p.depth;
        node.payoff = 0.0;
        if (p.shape->children.empty()) {
            node.kind = NodeKind::Leaf;
            node.payoff = p.shape->payoff;
            if (!(node.payoff >= 0.0 && node.payoff <= 1.0)) {
                throw std::invalid_argument("leaf payoff rate must lie in [0, 1]");
            }
            leaves_.push_back(id);
        } else {
            node.kind = p.depth % 2 == 1 ? NodeKind::Max : NodeKind::Min;
            node.num_children = static_cast<std::uint32_t>(p.shape->children.size());
        }
        nodes_.push_back(node);
        height_ = std::max(height_, p.depth);
        for (const auto& child : p.shape->children) {
            queue.push_back({&child, id, p.depth + 1});
        }
    }

    // Children were enqueued in order, so ids of a node's children are the
    // next block after all previously enqueued nodes.
    NodeId next = 1;
    child_ids_.resize(nodes_.size() > 0 ? nodes_.size() - 1 : 0);
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        Node& node = nodes_[id];
        node.first_child = next - 1;  // offset into child_ids_
        for (std::uint32_t c = 0; c < node.num_children; ++c) {
            child_ids_[next - 1] = next;
            ++next;
        }
    }

    stats_.resize(nodes_.size());
    if (options_.numeric) {
        axis_ = std::make_shared<const GridAxis>(options_.grid_points);
        grid_scratch_.resize(axis_->size());
    }
    reset();
}

std::span<const NodeId> BanditTree::children(NodeId id) const {
    const Node& n = node(id);
    return {child_ids_.data() + n.first_child, n.num_children};
}

void BanditTree::reset() {
    for (auto& s : stats_) {
        s.n = 0;
        s.reward_sum = 0.0;
        s.posterior = beta_uniform_prior();
    }
    recompute_beliefs();
}

void BanditTree::recompute_beliefs() {
    // Children always have larger ids than their parent.
    for (NodeId id = static_cast<NodeId>(nodes_.size()); id-- > 0;) {
        refresh_belief(id);
    }
}

void BanditTree::refresh_belief(NodeId id) {
    refresh_gaussian(id);
    if (options_.numeric) {
        refresh_grid(id);
    }
}

void BanditTree::refresh_gaussian(NodeId id) {
    const Node& node = nodes_[id];
    NodeStats& s = stats_[id];
    if (node.kind == NodeKind::Leaf) {
        s.gaussian = beta_to_gaussian(s.posterior);
        return;
    }
    gaussian_scratch_.clear();
    for (const NodeId c : children(id)) {
        gaussian_scratch_.push_back(stats_[c].gaussian);
    }
    const std::span<const GaussianBelief> kids(gaussian_scratch_);
    const bool is_max = node.kind == NodeKind::Max;
    if (options_.combiner == CombinerKind::MinError) {
        s.gaussian = is_max ? combine_max_min_error(kids, options_.rho, options_.tables)
                            : combine_min_min_error(kids, options_.rho, options_.tables);
    } else {
        // The combining order depends only on (node, visit count) so that a
        // full recomputation reproduces the incremental result exactly.
        SplitMix64 gen(derive_seed(id, s.n, kCombinerSalt));
        s.gaussian = is_max ? combine_max_random_order(kids, options_.rho, gen, options_.tables)
                            : combine_min_random_order(kids, options_.rho, gen, options_.tables);
    }
}

void BanditTree::refresh_grid(NodeId id) {
    const Node& node = nodes_[id];
    NodeStats& s = stats_[id];
    const std::size_t g = axis_->size();
    if (node.kind == NodeKind::Leaf) {
        fill_beta_density(s.posterior, *axis_, s.grid_pdf);
    } else {
        std::vector<std::span<const double>> cdfs;
        cdfs.reserve(node.num_children);
        for (const NodeId c : children(id)) {
            cdfs.emplace_back(stats_[c].grid_cdf);
        }
        s.grid_pdf.resize(g);
        grid_extremum_from_cdfs(cdfs, node.kind == NodeKind::Max, s.grid_pdf, grid_scratch_);
    }
    s.grid_cdf.resize(g);
    grid_cdf(s.grid_pdf, s.grid_cdf);
    s.grid_moments = grid_moments(s.grid_pdf);
}

// ---------------------------------------------------------------------------

std::vector<double> true_minimax_values(const BanditTree& tree) {
    std::vector<double> value(tree.size(), 0.0);
    for (NodeId id = static_cast<NodeId>(tree.size()); id-- > 0;) {
        const Node& node = tree.node(id);
        if (node.kind == NodeKind::Leaf) {
            value[id] = node.payoff;
            continue;
        }
        const auto kids = tree.children(id);
        double v = value[kids.front()];
        for (const NodeId c : kids.subspan(1)) {
            v = node.kind == NodeKind::Max ? std::max(v, value[c]) : std::min(v, value[c]);
        }
        value[id] = v;
    }
    return value;
}

int sample_leaf(const BanditTree& tree, NodeId leaf, Rng& rng) {
    const Node& node = tree.node(leaf);
    if (node.kind != NodeKind::Leaf) {
        throw std::invalid_argument("node " + std::to_string(leaf) + " is not a leaf");
    }
    return bernoulli(rng, node.payoff);
}

namespace {

void check_path(const BanditTree& tree, std::span<const NodeId> path) {
    if (path.empty() || path.front() != kRoot) {
        throw std::invalid_argument("trial path must start at the root");
    }
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (path[i] >= tree.size() || tree.node(path[i]).parent != path[i - 1]) {
            throw std::invalid_argument("trial path breaks the parent/child chain at position " +
                                        std::to_string(i));
        }
    }
    if (!tree.is_leaf(path.back())) {
        throw std::invalid_argument("trial path must end at a leaf");
    }
}

void add_outcome(BanditTree& tree, std::span<const NodeId> path, int reward) {
    const double r = reward != 0 ? 1.0 : 0.0;
    for (const NodeId id : path) {
        NodeStats& s = tree.stats(id);
        s.n += 1;
        s.reward_sum += r;
    }
}

}  // namespace

void backprop_uct(BanditTree& tree, std::span<const NodeId> path, int reward) {
    check_path(tree, path);
    add_outcome(tree, path, reward);
}

void backprop_bayes(BanditTree& tree, std::span<const NodeId> path, int reward) {
    check_path(tree, path);
    add_outcome(tree, path, reward);
    NodeStats& leaf = tree.stats(path.back());
    leaf.posterior = beta_update(leaf.posterior, reward);
    for (std::size_t i = path.size(); i-- > 0;) {
        tree.refresh_belief(path[i]);
    }
}

GaussianBelief node_belief(const BanditTree& tree, NodeId id, Backend backend) {
    const NodeStats& s = tree.stats(id);
    if (backend == Backend::Numeric) {
        if (tree.grid_axis() == nullptr) {
            throw std::logic_error("numeric beliefs were not enabled for this tree");
        }
        return {s.grid_moments.mean, std::sqrt(s.grid_moments.variance)};
    }
    return s.gaussian;
}

BoundInputs node_bound_inputs(const BanditTree& tree, NodeId id, Backend backend) {
    const Node& node = tree.node(id);
    const NodeStats& s = tree.stats(id);
    const GaussianBelief b = node_belief(tree, id, backend);
    const std::uint64_t parent_n = node.parent == kNoParent ? s.n : tree.stats(node.parent).n;
    return {b.mu, b.sigma, s.n, parent_n, s.mean_reward()};
}

void dump_tree(const BanditTree& tree, std::ostream& out) {
    char line[256];
    for (NodeId id = 0; id < tree.size(); ++id) {
        const Node& node = tree.node(id);
        const NodeStats& s = tree.stats(id);
        const long long parent = node.parent == kNoParent ? -1 : static_cast<long long>(node.parent);
        std::snprintf(line, sizeof line, "%u %s %u %lld %.6g %llu %.6g %.6g %.6g\n", id,
                      to_string(node.kind), node.depth, parent, node.payoff,
                      static_cast<unsigned long long>(s.n), s.reward_sum, s.gaussian.mu,
                      s.gaussian.sigma);
        out << line;
    }
}

}  // namespace bmcts
