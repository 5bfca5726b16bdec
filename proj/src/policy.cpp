#include "bmcts/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bmcts {

std::string_view policy_name(PolicyKind kind) noexcept {
    switch (kind) {
        case PolicyKind::Uct: return "uct";
        case PolicyKind::BayesUct1: return "bayes1";
        case PolicyKind::BayesUct2: return "bayes2";
        case PolicyKind::UniformRandom: return "random";
        case PolicyKind::Hybrid: return "hybrid";
    }
    return "?";
}

std::string_view backend_name(const Policy& policy) noexcept {
    if (policy.kind == PolicyKind::Uct) {
        return "none";
    }
    return to_string(policy.backend);
}

std::string policy_label(const Policy& policy) {
    std::string label(policy_name(policy.kind));
    if (policy.kind != PolicyKind::Uct) {
        label += policy.backend == Backend::Numeric ? 'n' : 'g';
    }
    return label;
}

std::optional<Policy> parse_policy(std::string_view text, Backend default_backend) {
    Policy p;
    p.backend = default_backend;
    for (const PolicyKind kind : {PolicyKind::Uct, PolicyKind::BayesUct1, PolicyKind::BayesUct2,
                                  PolicyKind::UniformRandom, PolicyKind::Hybrid}) {
        const std::string_view name = policy_name(kind);
        if (text == name) {
            p.kind = kind;
            return p;
        }
        if (kind != PolicyKind::Uct && text.size() == name.size() + 1 && text.starts_with(name)) {
            const char suffix = text.back();
            if (suffix == 'g' || suffix == 'n') {
                p.kind = kind;
                p.backend = suffix == 'n' ? Backend::Numeric : Backend::Gaussian;
                return p;
            }
        }
    }
    return std::nullopt;
}

namespace {

double log_visits(std::uint64_t parent_n) noexcept {
    return std::log(static_cast<double>(parent_n > 1 ? parent_n : 1));
}

}  // namespace

double ucb1_bound(double mean_reward, std::uint64_t n, std::uint64_t parent_n) noexcept {
    if (n == 0) {
        return kInfiniteBound;
    }
    return mean_reward + std::sqrt(2.0 * log_visits(parent_n) / static_cast<double>(n));
}

double bayes_uct1_bound(double mu, std::uint64_t n, std::uint64_t parent_n) noexcept {
    return ucb1_bound(mu, n, parent_n);
}

double bayes_uct2_bound(double mu, double sigma, std::uint64_t parent_n) noexcept {
    return mu + std::sqrt(2.0 * log_visits(parent_n)) * sigma;
}

double selection_bound(const BanditTree& tree, NodeId child, const Policy& policy) {
    const Node& node = tree.node(child);
    const bool mirrored =
        node.parent != kNoParent && tree.node(node.parent).kind == NodeKind::Min;
    const NodeStats& s = tree.stats(child);
    const std::uint64_t parent_n = node.parent == kNoParent ? s.n : tree.stats(node.parent).n;
    auto value = [mirrored](double v) { return mirrored ? 1.0 - v : v; };

    switch (policy.kind) {
        case PolicyKind::Uct:
        case PolicyKind::Hybrid:
            return ucb1_bound(value(s.mean_reward()), s.n, parent_n);
        case PolicyKind::BayesUct1:
            return bayes_uct1_bound(value(node_belief(tree, child, policy.backend).mu), s.n,
                                    parent_n);
        case PolicyKind::BayesUct2: {
            const GaussianBelief b = node_belief(tree, child, policy.backend);
            return bayes_uct2_bound(value(b.mu), b.sigma, parent_n);
        }
        case PolicyKind::UniformRandom:
            return 0.0;
    }
    return 0.0;
}

NodeId select_child(const BanditTree& tree, NodeId node, const Policy& policy, Rng& rng) {
    const auto kids = tree.children(node);
    if (kids.empty()) {
        throw std::invalid_argument("cannot select a child of leaf " + std::to_string(node));
    }
    if (kids.size() == 1) {
        return kids.front();
    }
    if (policy.kind == PolicyKind::UniformRandom) {
        return kids[uniform_index(rng, kids.size())];
    }

    // Children are consecutive ids, so ties can be tracked as a bitmask of
    // offsets for the common small-width case.
    double best = -kInfiniteBound;
    std::uint32_t ties = 0;
    std::uint32_t tie_buffer[64];
    std::vector<std::uint32_t> tie_overflow;
    const bool small = kids.size() <= 64;
    for (std::uint32_t i = 0; i < kids.size(); ++i) {
        const double b = selection_bound(tree, kids[i], policy);
        if (b > best) {
            best = b;
            ties = 0;
            tie_overflow.clear();
        }
        if (b == best) {
            if (small) {
                tie_buffer[ties] = i;
            } else {
                tie_overflow.push_back(i);
            }
            ++ties;
        }
    }
    if (ties == 1) {
        return kids[small ? tie_buffer[0] : tie_overflow[0]];
    }
    const auto pick = uniform_index(rng, ties);
    return kids[small ? tie_buffer[pick] : tie_overflow[pick]];
}

void run_trial(BanditTree& tree, const Policy& policy, Rng& rng, TrialRecord& record,
               TrialOptions options) {
    record.path.clear();
    NodeId current = kRoot;
    record.path.push_back(current);
    while (!tree.is_leaf(current)) {
        current = select_child(tree, current, policy, rng);
        record.path.push_back(current);
    }
    record.reward = sample_leaf(tree, current, rng);

    const bool beliefs = policy.needs_beliefs() || options.force_beliefs;
    if (beliefs && options.defer_beliefs && !policy.samples_with_beliefs()) {
        backprop_uct(tree, record.path, record.reward);
        NodeStats& leaf = tree.stats(current);
        leaf.posterior = beta_update(leaf.posterior, record.reward);
    } else if (beliefs) {
        backprop_bayes(tree, record.path, record.reward);
    } else {
        backprop_uct(tree, record.path, record.reward);
    }
}

TrialRecord run_trial(BanditTree& tree, const Policy& policy, Rng& rng, TrialOptions options) {
    TrialRecord record;
    run_trial(tree, policy, rng, record, options);
    return record;
}

NodeId greedy_root_choice(const BanditTree& tree, const Policy& policy) {
    const auto kids = tree.children(kRoot);
    NodeId best = kids.front();
    if (policy.answers_with_beliefs()) {
        double best_mu = node_belief(tree, best, policy.backend).mu;
        for (const NodeId c : kids.subspan(1)) {
            const double mu = node_belief(tree, c, policy.backend).mu;
            if (mu > best_mu) {
                best_mu = mu;
                best = c;
            }
        }
        return best;
    }
    // UCT: visited children by r-bar; unvisited only if none were visited.
    bool found = false;
    double best_mean = 0.0;
    for (const NodeId c : kids) {
        const NodeStats& s = tree.stats(c);
        if (s.n == 0) continue;
        const double m = s.mean_reward();
        if (!found || m > best_mean) {
            found = true;
            best_mean = m;
            best = c;
        }
    }
    return found ? best : kids.front();
}

}  // namespace bmcts
