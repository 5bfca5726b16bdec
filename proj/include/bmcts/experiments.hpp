#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bmcts/policy.hpp"
#include "bmcts/tree.hpp"

namespace bmcts {

enum class PayoffModel : std::uint8_t { Uniform, Gaussian };

std::string_view to_string(PayoffModel model) noexcept;

struct WidthRange {
    std::uint32_t lo;
    std::uint32_t hi;
};

/// Shape and payoff distribution of random bandit trees. `depth` counts
/// decision levels; leaves hang below level `depth`.
struct TreeSpec {
    std::uint32_t depth = 2;
    bool random_width = false;
    std::uint32_t width = 5;
    WidthRange root_widths{2, 10};
    WidthRange widths{1, 10};
    PayoffModel payoffs = PayoffModel::Uniform;

    /// Throws std::invalid_argument when the spec is unusable.
    void validate() const;
    /// Width column for reports: "5" or "r2-10/1-10".
    std::string width_label() const;
};

/// Mean and standard deviation of Gaussian-model payoff rates, and the open
/// interval draws are resampled into.
inline constexpr double kGaussianPayoffMean = 0.5;
inline constexpr double kGaussianPayoffSd = 0.1;
inline constexpr double kPayoffLow = 0.001;
inline constexpr double kPayoffHigh = 0.999;

/// Seeds for tree generation and for trial randomness of tree `index`.
/// Neither depends on the algorithm, so every algorithm sees the same trees
/// and the same trial stream.
std::uint64_t tree_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;
std::uint64_t trial_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

TreeShape generate_shape(const TreeSpec& spec, std::uint64_t seed);
BanditTree generate_tree(const TreeSpec& spec, std::uint64_t seed, BeliefOptions options = {});

struct ExperimentConfig {
    TreeSpec tree;
    std::vector<Policy> algorithms;
    std::uint32_t num_trees = 1000;
    std::uint64_t max_trials = 2000;
    std::uint64_t eval_every = 10;
    double error_threshold = 0.01;
    std::uint64_t master_seed = 0;
    double payout_cost_sec = 1e-4;
    CombinerKind combiner = CombinerKind::RandomOrder;
    std::size_t grid_points = kDefaultGridPoints;
    unsigned jobs = 1;
    /// Receives human-readable progress lines; may be empty.
    std::function<void(const std::string&)> progress;

    void validate() const;
    /// Belief options for trees run under `policy`.
    BeliefOptions belief_options(const Policy& policy) const;
};

/// True loss of the greedy root move: V*(best root child) - V*(chosen).
double greedy_decision_error(const BanditTree& tree, const Policy& policy,
                             std::span<const double> true_values);
double greedy_decision_error(const BanditTree& tree, const Policy& policy);

struct CurvePoint {
    std::uint64_t trial;
    double mean_error;
    double std_error;
    std::uint32_t num_trees;
};

struct ErrorCurve {
    Policy policy;
    std::vector<CurvePoint> points;
};

/// Greedy decision error averaged over the paired tree set at every
/// evaluation checkpoint, one curve per algorithm.
std::vector<ErrorCurve> run_error_curve(const ExperimentConfig& config);

/// First checkpoint whose mean error is at or below `threshold`.
std::optional<std::uint64_t> first_crossing(const ErrorCurve& curve, double threshold);

struct ThresholdResult {
    Policy policy;
    std::optional<std::uint64_t> trials;  // empty: not reached within max_trials
};

/// Trials until the cross-tree mean error first reaches the threshold.
/// Stops as soon as the threshold is crossed; results equal
/// first_crossing() of the corresponding full curve.
std::vector<ThresholdResult> trials_to_threshold(const ExperimentConfig& config);

struct VisitBin {
    std::uint64_t lo;
    std::uint64_t hi;
    double mean_abs_error;
    std::uint64_t count;
};

struct BinnedErrors {
    Policy policy;
    std::vector<VisitBin> bins;  // bins without samples are omitted
};

/// Absolute error of root-child value estimates, recorded every time a root
/// child is sampled and binned by its visit count in power-of-two bins
/// [2^k, 2^(k+1) - 1]. UCT uses r-bar, the other policies posterior means.
std::vector<BinnedErrors> estimation_error_binned(const ExperimentConfig& config);

/// Error curves for UCT, full Bayes-UCT2 and the hybrid policy (UCT
/// sampling, Bayesian answers). The algorithm list of `config` is replaced;
/// the Bayesian backend is taken from its first Bayesian entry, if any.
std::vector<ErrorCurve> run_hybrid_study(const ExperimentConfig& config);

struct SpeedResult {
    Policy policy;
    double raw_trials_per_sec;
    double adjusted_trials_per_sec;
    double payout_cost_sec;
};

/// 1 / (1 / raw + cost).
double adjusted_rate(double raw_trials_per_sec, double payout_cost_sec) noexcept;

/// Wall-clock trial throughput over the tree set (tree construction
/// excluded). Timing-dependent by nature.
std::vector<SpeedResult> speed_benchmark(const ExperimentConfig& config);

struct BackendAgreement {
    std::uint64_t comparisons = 0;
    std::uint64_t within = 0;
    double max_abs_diff = 0.0;
    double mean_abs_diff = 0.0;
    double tolerance = 0.0;

    double fraction_within() const noexcept {
        return comparisons > 0 ? static_cast<double>(within) / static_cast<double>(comparisons)
                               : 1.0;
    }
};

/// Runs Gaussian Bayes-UCT2 while also tracking numeric beliefs and compares
/// the two means of every interior node at each checkpoint.
BackendAgreement backend_agreement(const ExperimentConfig& config, double tolerance);

struct ConvergenceConfig {
    TreeShape shape;
    Policy policy{PolicyKind::BayesUct2, Backend::Gaussian};
    std::uint64_t trials = 200000;
    std::uint32_t runs = 100;
    std::uint64_t master_seed = 0;
    double tolerance = 0.02;
    std::size_t grid_points = kDefaultGridPoints;
    CombinerKind combiner = CombinerKind::RandomOrder;
    unsigned jobs = 1;
    std::function<void(const std::string&)> progress;
};

struct ConvergenceRun {
    std::uint32_t run;
    double root_mean;
    double abs_error;
    bool within;
};

struct ConvergenceReport {
    Policy policy;
    std::uint64_t trials;
    double true_value;
    std::vector<ConvergenceRun> runs;

    std::uint32_t passed() const noexcept;
};

/// Independent runs on one fixed tree; reports the root posterior mean
/// against the true minimax value after `trials` trials.
ConvergenceReport convergence_study(const ConvergenceConfig& config);

/// Depth-2, width-3 tree with leaf rates spaced 0.1 apart and distinct
/// minimax values at every level (root value 0.3).
TreeShape separated_test_shape();

/// Runs `body(i)` for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& body);

// CSV output. Floats use 6 significant digits.
void write_curve_csv(std::ostream& out, std::span<const ErrorCurve> curves, std::uint32_t num_trees);
void write_table1_csv(std::ostream& out, const TreeSpec& spec,
                      std::span<const ThresholdResult> results, std::uint64_t max_trials);
void write_fig4a_csv(std::ostream& out, std::span<const BinnedErrors> results);
void write_bench_csv(std::ostream& out, std::span<const SpeedResult> results);
void write_converge_csv(std::ostream& out, const ConvergenceReport& report, double tolerance);

/// "%.6g" formatting.
std::string format_float(double value);

}  // namespace bmcts
