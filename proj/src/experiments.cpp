#include "bmcts/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace bmcts {

namespace {

constexpr std::uint64_t kTreeSalt = 0x74726565ULL;    // "tree"
constexpr std::uint64_t kTrialSalt = 0x747269616cULL;  // "trial"

}  // namespace

std::string_view to_string(PayoffModel model) noexcept {
    return model == PayoffModel::Gaussian ? "gaussian" : "uniform";
}

void TreeSpec::validate() const {
    if (depth < 1) {
        throw std::invalid_argument("tree depth must be at least 1");
    }
    if (random_width) {
        if (root_widths.lo < 2 || root_widths.lo > root_widths.hi) {
            throw std::invalid_argument("root width range must satisfy 2 <= lo <= hi");
        }
        if (widths.lo < 1 || widths.lo > widths.hi) {
            throw std::invalid_argument("width range must satisfy 1 <= lo <= hi");
        }
    } else if (width < 1) {
        throw std::invalid_argument("tree width must be at least 1");
    }
}

std::string TreeSpec::width_label() const {
    if (!random_width) {
        return std::to_string(width);
    }
    return "r" + std::to_string(root_widths.lo) + "-" + std::to_string(root_widths.hi) + "/" +
           std::to_string(widths.lo) + "-" + std::to_string(widths.hi);
}

std::uint64_t tree_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
    return derive_seed(master_seed, index, kTreeSalt);
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
    return derive_seed(master_seed, index, kTrialSalt);
}

TreeShape generate_shape(const TreeSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    auto draw_width = [&](bool root) -> std::uint32_t {
        if (!spec.random_width) {
            return spec.width;
        }
        const WidthRange r = root ? spec.root_widths : spec.widths;
        return r.lo + static_cast<std::uint32_t>(uniform_index(rng, r.hi - r.lo + 1));
    };

    TreeShape root;
    std::vector<TreeShape*> level{&root};
    for (std::uint32_t d = 1; d <= spec.depth; ++d) {
        std::vector<TreeShape*> next;
        for (TreeShape* node : level) {
            node->children.resize(draw_width(d == 1));
            for (auto& child : node->children) {
                next.push_back(&child);
            }
        }
        level = std::move(next);
    }
    for (TreeShape* leaf : level) {
        if (spec.payoffs == PayoffModel::Uniform) {
            leaf->payoff = uniform_open01(rng);
        } else {
            double p;
            do {
                p = kGaussianPayoffMean + kGaussianPayoffSd * standard_normal(rng);
            } while (!(p > kPayoffLow && p < kPayoffHigh));
            leaf->payoff = p;
        }
    }
    return root;
}

BanditTree generate_tree(const TreeSpec& spec, std::uint64_t seed, BeliefOptions options) {
    return BanditTree(generate_shape(spec, seed), options);
}

void ExperimentConfig::validate() const {
    tree.validate();
    if (algorithms.empty()) {
        throw std::invalid_argument("at least one algorithm is required");
    }
    if (num_trees == 0) throw std::invalid_argument("number of trees must be positive");
    if (eval_every == 0) throw std::invalid_argument("evaluation interval must be positive");
    if (max_trials < eval_every) {
        throw std::invalid_argument("max trials must be at least the evaluation interval");
    }
    if (!(payout_cost_sec >= 0.0)) throw std::invalid_argument("payout cost must be >= 0");
    if (grid_points < kMinGridPoints) throw std::invalid_argument("grid needs >= 16 points");
}

BeliefOptions ExperimentConfig::belief_options(const Policy& policy) const {
    BeliefOptions opts;
    opts.numeric = policy.needs_beliefs() && policy.backend == Backend::Numeric;
    opts.grid_points = grid_points;
    opts.combiner = combiner;
    return opts;
}

double greedy_decision_error(const BanditTree& tree, const Policy& policy,
                             std::span<const double> true_values) {
    double best = -1.0;
    for (const NodeId c : tree.children(kRoot)) {
        best = std::max(best, true_values[c]);
    }
    return best - true_values[greedy_root_choice(tree, policy)];
}

double greedy_decision_error(const BanditTree& tree, const Policy& policy) {
    const auto values = true_minimax_values(tree);
    return greedy_decision_error(tree, policy, values);
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    const std::size_t n = std::min<std::size_t>(jobs, count);
    for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

// One tree under one policy with its own trial stream.
struct TreeRun {
    TreeRun(const ExperimentConfig& config, const Policy& p, std::uint32_t index)
        : tree(generate_tree(config.tree, tree_seed(config.master_seed, index),
                             config.belief_options(p))),
          rng(trial_seed(config.master_seed, index)),
          truth(true_minimax_values(tree)),
          policy(p) {}

    void advance(std::uint64_t trials) {
        for (std::uint64_t t = 0; t < trials; ++t) {
            run_trial(tree, policy, rng, record);
        }
    }

    double error() const { return greedy_decision_error(tree, policy, truth); }

    BanditTree tree;
    Rng rng;
    std::vector<double> truth;
    Policy policy;
    TrialRecord record;
};

void report(const std::function<void(const std::string&)>& progress, const std::string& line) {
    if (progress) progress(line);
}

std::size_t checkpoint_count(const ExperimentConfig& c) { return c.max_trials / c.eval_every; }

CurvePoint aggregate(std::uint64_t trial, std::span<const double> errors) {
    const auto n = static_cast<double>(errors.size());
    double sum = 0.0;
    for (const double e : errors) sum += e;
    const double mean = sum / n;
    double sq = 0.0;
    for (const double e : errors) sq += (e - mean) * (e - mean);
    const double se = errors.size() > 1 ? std::sqrt(sq / (n - 1.0) / n) : 0.0;
    return {trial, mean, se, static_cast<std::uint32_t>(errors.size())};
}

ErrorCurve curve_for(const ExperimentConfig& config, const Policy& policy) {
    const std::size_t checkpoints = checkpoint_count(config);
    // errors[tree][checkpoint]
    std::vector<std::vector<double>> errors(config.num_trees);
    std::atomic<std::uint32_t> done{0};
    parallel_for(config.num_trees, config.jobs, [&](std::size_t i) {
        TreeRun run(config, policy, static_cast<std::uint32_t>(i));
        auto& row = errors[i];
        row.resize(checkpoints);
        for (std::size_t k = 0; k < checkpoints; ++k) {
            run.advance(config.eval_every);
            row[k] = run.error();
        }
        const auto finished = ++done;
        if (finished % 100 == 0 || finished == config.num_trees) {
            report(config.progress, policy_label(policy) + ": " + std::to_string(finished) + "/" +
                                        std::to_string(config.num_trees) + " trees");
        }
    });

    ErrorCurve curve{policy, {}};
    curve.points.reserve(checkpoints);
    std::vector<double> column(config.num_trees);
    for (std::size_t k = 0; k < checkpoints; ++k) {
        for (std::size_t i = 0; i < config.num_trees; ++i) column[i] = errors[i][k];
        curve.points.push_back(aggregate((k + 1) * config.eval_every, column));
    }
    return curve;
}

}  // namespace

std::vector<ErrorCurve> run_error_curve(const ExperimentConfig& config) {
    config.validate();
    std::vector<ErrorCurve> curves;
    for (const Policy& p : config.algorithms) {
        curves.push_back(curve_for(config, p));
    }
    return curves;
}

std::optional<std::uint64_t> first_crossing(const ErrorCurve& curve, double threshold) {
    for (const auto& pt : curve.points) {
        if (pt.mean_error <= threshold) return pt.trial;
    }
    return std::nullopt;
}

std::vector<ThresholdResult> trials_to_threshold(const ExperimentConfig& config) {
    config.validate();
    std::vector<ThresholdResult> results;
    for (const Policy& policy : config.algorithms) {
        if (config.belief_options(policy).numeric) {
            // Grid beliefs for every tree at once would not fit in memory;
            // fall back to the full per-tree curve.
            results.push_back({policy, first_crossing(curve_for(config, policy),
                                                      config.error_threshold)});
            continue;
        }
        std::vector<std::optional<TreeRun>> runs(config.num_trees);
        parallel_for(config.num_trees, config.jobs, [&](std::size_t i) {
            runs[i].emplace(config, policy, static_cast<std::uint32_t>(i));
        });
        std::vector<double> errors(config.num_trees);
        std::optional<std::uint64_t> reached;
        const std::size_t checkpoints = checkpoint_count(config);
        for (std::size_t k = 0; k < checkpoints && !reached; ++k) {
            parallel_for(config.num_trees, config.jobs, [&](std::size_t i) {
                runs[i]->advance(config.eval_every);
                errors[i] = runs[i]->error();
            });
            const CurvePoint pt = aggregate((k + 1) * config.eval_every, errors);
            if (pt.mean_error <= config.error_threshold) reached = pt.trial;
            if ((k + 1) % 100 == 0) {
                report(config.progress, policy_label(policy) + ": trial " +
                                            std::to_string(pt.trial) + " mean error " +
                                            format_float(pt.mean_error));
            }
        }
        results.push_back({policy, reached});
    }
    return results;
}

std::vector<BinnedErrors> estimation_error_binned(const ExperimentConfig& config) {
    config.validate();
    constexpr std::size_t kBins = 64;
    std::vector<BinnedErrors> out;
    for (const Policy& policy : config.algorithms) {
        std::vector<std::vector<double>> sums(config.num_trees);
        std::vector<std::vector<std::uint64_t>> counts(config.num_trees);
        parallel_for(config.num_trees, config.jobs, [&](std::size_t i) {
            TreeRun run(config, policy, static_cast<std::uint32_t>(i));
            auto& sum = sums[i];
            auto& count = counts[i];
            sum.assign(kBins, 0.0);
            count.assign(kBins, 0);
            for (std::uint64_t t = 0; t < config.max_trials; ++t) {
                run_trial(run.tree, policy, run.rng, run.record);
                const NodeId top = run.record.path.at(1);
                const NodeStats& s = run.tree.stats(top);
                const double estimate = policy.answers_with_beliefs()
                                            ? node_belief(run.tree, top, policy.backend).mu
                                            : s.mean_reward();
                const auto bin = static_cast<std::size_t>(std::bit_width(s.n) - 1);
                sum[bin] += std::abs(estimate - run.truth[top]);
                count[bin] += 1;
            }
        });
        BinnedErrors result{policy, {}};
        for (std::size_t b = 0; b < kBins; ++b) {
            double s = 0.0;
            std::uint64_t c = 0;
            for (std::size_t i = 0; i < config.num_trees; ++i) {
                s += sums[i][b];
                c += counts[i][b];
            }
            if (c == 0) continue;
            const std::uint64_t lo = std::uint64_t{1} << b;
            result.bins.push_back({lo, 2 * lo - 1, s / static_cast<double>(c), c});
        }
        out.push_back(std::move(result));
        report(config.progress, policy_label(policy) + ": estimation errors done");
    }
    return out;
}

std::vector<ErrorCurve> run_hybrid_study(const ExperimentConfig& config) {
    Backend backend = Backend::Gaussian;
    for (const Policy& p : config.algorithms) {
        if (p.kind != PolicyKind::Uct) {
            backend = p.backend;
            break;
        }
    }
    ExperimentConfig c = config;
    c.algorithms = {Policy{PolicyKind::Uct, backend}, Policy{PolicyKind::BayesUct2, backend},
                    Policy{PolicyKind::Hybrid, backend}};
    return run_error_curve(c);
}

double adjusted_rate(double raw_trials_per_sec, double payout_cost_sec) noexcept {
    return 1.0 / (1.0 / raw_trials_per_sec + payout_cost_sec);
}

std::vector<SpeedResult> speed_benchmark(const ExperimentConfig& config) {
    config.validate();
    std::vector<SpeedResult> out;
    for (const Policy& policy : config.algorithms) {
        double seconds = 0.0;
        for (std::uint32_t i = 0; i < config.num_trees; ++i) {
            TreeRun run(config, policy, i);
            const auto start = std::chrono::steady_clock::now();
            run.advance(config.max_trials);
            const auto stop = std::chrono::steady_clock::now();
            seconds += std::chrono::duration<double>(stop - start).count();
        }
        const double trials = static_cast<double>(config.num_trees) *
                              static_cast<double>(config.max_trials);
        const double raw = trials / std::max(seconds, 1e-9);
        out.push_back({policy, raw, adjusted_rate(raw, config.payout_cost_sec),
                       config.payout_cost_sec});
        report(config.progress, policy_label(policy) + ": " + format_float(raw) + " trials/s");
    }
    return out;
}

BackendAgreement backend_agreement(const ExperimentConfig& config, double tolerance) {
    config.validate();
    const Policy policy{PolicyKind::BayesUct2, Backend::Gaussian};
    struct Tally {
        std::uint64_t comparisons = 0;
        std::uint64_t within = 0;
        double max_diff = 0.0;
        double sum_diff = 0.0;
    };
    std::vector<Tally> tallies(config.num_trees);
    parallel_for(config.num_trees, config.jobs, [&](std::size_t i) {
        BeliefOptions opts = config.belief_options(policy);
        opts.numeric = true;
        BanditTree tree = generate_tree(config.tree, tree_seed(config.master_seed, i), opts);
        Rng rng(trial_seed(config.master_seed, i));
        TrialRecord record;
        Tally& tally = tallies[i];
        for (std::uint64_t t = 1; t <= config.max_trials; ++t) {
            run_trial(tree, policy, rng, record);
            if (t % config.eval_every != 0) continue;
            for (NodeId id = 0; id < tree.size(); ++id) {
                if (tree.is_leaf(id)) continue;
                const double diff = std::abs(tree.stats(id).gaussian.mu -
                                             tree.stats(id).grid_moments.mean);
                tally.comparisons += 1;
                tally.within += diff <= tolerance ? 1 : 0;
                tally.max_diff = std::max(tally.max_diff, diff);
                tally.sum_diff += diff;
            }
        }
    });
    BackendAgreement result;
    result.tolerance = tolerance;
    double sum = 0.0;
    for (const Tally& t : tallies) {
        result.comparisons += t.comparisons;
        result.within += t.within;
        result.max_abs_diff = std::max(result.max_abs_diff, t.max_diff);
        sum += t.sum_diff;
    }
    result.mean_abs_diff = result.comparisons > 0 ? sum / static_cast<double>(result.comparisons) : 0.0;
    return result;
}

std::uint32_t ConvergenceReport::passed() const noexcept {
    return static_cast<std::uint32_t>(
        std::count_if(runs.begin(), runs.end(), [](const ConvergenceRun& r) { return r.within; }));
}

ConvergenceReport convergence_study(const ConvergenceConfig& config) {
    if (config.runs == 0) throw std::invalid_argument("convergence study needs at least one run");
    BeliefOptions opts;
    opts.numeric = config.policy.backend == Backend::Numeric;
    opts.grid_points = config.grid_points;
    opts.combiner = config.combiner;

    ConvergenceReport report_out;
    report_out.policy = config.policy;
    report_out.trials = config.trials;
    report_out.true_value = true_minimax_values(BanditTree(config.shape))[kRoot];
    report_out.runs.resize(config.runs);

    // Policies that do not read beliefs while sampling only need them at the end.
    TrialOptions trial_opts;
    trial_opts.defer_beliefs = !config.policy.samples_with_beliefs();

    std::atomic<std::uint32_t> done{0};
    parallel_for(config.runs, config.jobs, [&](std::size_t r) {
        BanditTree tree(config.shape, opts);
        Rng rng(trial_seed(config.master_seed, r));
        TrialRecord record;
        for (std::uint64_t t = 0; t < config.trials; ++t) {
            run_trial(tree, config.policy, rng, record, trial_opts);
        }
        if (trial_opts.defer_beliefs) tree.recompute_beliefs();
        const double mean = node_belief(tree, kRoot, config.policy.backend).mu;
        const double err = std::abs(mean - report_out.true_value);
        report_out.runs[r] = {static_cast<std::uint32_t>(r), mean, err, err <= config.tolerance};
        const auto finished = ++done;
        if (finished % 10 == 0 || finished == config.runs) {
            report(config.progress, policy_label(config.policy) + ": " + std::to_string(finished) +
                                        "/" + std::to_string(config.runs) + " runs");
        }
    });
    return report_out;
}

TreeShape separated_test_shape() {
    using S = TreeShape;
    return S::node({
        S::node({S::leaf(0.9), S::leaf(0.6), S::leaf(0.3)}),
        S::node({S::leaf(0.8), S::leaf(0.5), S::leaf(0.2)}),
        S::node({S::leaf(0.7), S::leaf(0.4), S::leaf(0.1)}),
    });
}

// ---------------------------------------------------------------------------
// CSV

std::string format_float(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

void write_curve_csv(std::ostream& out, std::span<const ErrorCurve> curves, std::uint32_t num_trees) {
    out << "algorithm,backend,trial,mean_error,stderr,num_trees\n";
    for (const auto& curve : curves) {
        for (const auto& pt : curve.points) {
            out << policy_name(curve.policy.kind) << ',' << backend_name(curve.policy) << ','
                << pt.trial << ',' << format_float(pt.mean_error) << ','
                << format_float(pt.std_error) << ',' << (pt.num_trees ? pt.num_trees : num_trees)
                << '\n';
        }
    }
}

void write_table1_csv(std::ostream& out, const TreeSpec& spec,
                      std::span<const ThresholdResult> results, std::uint64_t max_trials) {
    out << "depth,width,payoff_model,algorithm,backend,trials_to_threshold,exceeded\n";
    for (const auto& r : results) {
        out << spec.depth << ',' << spec.width_label() << ',' << to_string(spec.payoffs) << ','
            << policy_name(r.policy.kind) << ',' << backend_name(r.policy) << ','
            << (r.trials ? *r.trials : max_trials) << ',' << (r.trials ? 0 : 1) << '\n';
    }
}

void write_fig4a_csv(std::ostream& out, std::span<const BinnedErrors> results) {
    out << "algorithm,backend,visit_bin_lo,visit_bin_hi,mean_abs_error,count\n";
    for (const auto& r : results) {
        for (const auto& b : r.bins) {
            out << policy_name(r.policy.kind) << ',' << backend_name(r.policy) << ',' << b.lo << ','
                << b.hi << ',' << format_float(b.mean_abs_error) << ',' << b.count << '\n';
        }
    }
}

void write_bench_csv(std::ostream& out, std::span<const SpeedResult> results) {
    out << "algorithm,backend,raw_trials_per_sec,adjusted_trials_per_sec,payout_cost_sec\n";
    for (const auto& r : results) {
        out << policy_name(r.policy.kind) << ',' << backend_name(r.policy) << ','
            << format_float(r.raw_trials_per_sec) << ',' << format_float(r.adjusted_trials_per_sec)
            << ',' << format_float(r.payout_cost_sec) << '\n';
    }
}

void write_converge_csv(std::ostream& out, const ConvergenceReport& report, double tolerance) {
    out << "run,algorithm,backend,trials,root_mean,true_value,abs_error,within_tolerance\n";
    for (const auto& r : report.runs) {
        out << r.run << ',' << policy_name(report.policy.kind) << ',' << backend_name(report.policy)
            << ',' << report.trials << ',' << format_float(r.root_mean) << ','
            << format_float(report.true_value) << ',' << format_float(r.abs_error) << ','
            << (r.abs_error <= tolerance ? 1 : 0) << '\n';
    }
}

}  // namespace bmcts
